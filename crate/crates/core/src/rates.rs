//! Power-law fits and the coming-down-from-infinity rate checks for the PDE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{l1_norm, solve_pde, Field, PdeParams};
use crate::trace::{InitialTrace, IntervalSet};

/// Pinned reference value of `C₁ = ‖v^{({0},0)}_1‖₁` with its generating
/// configuration.
pub const C1_REFERENCE_JSON: &str = include_str!("../data/c1_reference.json");

/// Result of a least-squares fit `log y = log_prefactor + exponent·log t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    /// Coefficient of determination; `NaN` with fewer than three points.
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

impl PowerFit {
    pub fn prefactor(&self) -> f64 {
        self.log_prefactor.exp()
    }
}

/// Ordinary least squares of `log y` on `log t`. Needs at least two points;
/// abscissae must be positive and strictly increasing and ordinates positive.
pub fn fit_log_log(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < 2 {
        return Err(Error::param("need at least two samples"));
    }
    if samples.iter().any(|&(t, _)| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::domain("abscissae must be positive and finite"));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("abscissae must be strictly increasing"));
    }
    if let Some(&(t, y)) = samples.iter().find(|s| !(s.1 > 0.0) || !s.1.is_finite()) {
        return Err(Error::domain(format!("nonpositive value {y} at t = {t}")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if samples.len() < 3 {
        f64::NAN
    } else if syy <= 1e-30 * (1.0 + my * my) {
        1.0
    } else {
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - my - slope * (x - mx);
                e * e
            })
            .sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(PowerFit {
        exponent: slope,
        log_prefactor: my - slope * mx,
        r_squared,
        window: (samples[0].0, samples[samples.len() - 1].0),
        n_points: samples.len(),
    })
}

/// [`fit_log_log`] with the stricter minimum of four samples.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < 4 {
        return Err(Error::param("need at least four samples"));
    }
    fit_log_log(samples)
}

/// `C₁` estimates across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    pub levels: Vec<u32>,
    pub estimates: Vec<f64>,
    /// Richardson extrapolate of the two finest levels.
    pub extrapolated: f64,
}

/// Largest relative disagreement tolerated between successive levels.
const C1_CAUCHY_TOL: f64 = 0.05;

/// Solves from `({0}, 0)` at each refinement level of `params` and reports
/// `‖v_1‖₁` per level.
///
/// The leading error comes from the initial regularisation, whose missing
/// mass scales like `√t_init`; a level halves `√t_init`, so the extrapolate
/// is `2·fine − coarse`.
pub fn estimate_c1(params: &PdeParams, levels: &[u32]) -> Result<C1Estimate> {
    if levels.len() < 2 {
        return Err(Error::param("need at least two refinement levels"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("refinement levels must be strictly increasing"));
    }
    let trace = InitialTrace::singular(IntervalSet::point(0.0));
    let mut estimates = Vec::with_capacity(levels.len());
    for &level in levels {
        let field = solve_pde(&trace, &params.refined(level), &[1.0])?;
        estimates.push(l1_norm(&field, 1.0)?);
    }
    for w in estimates.windows(2) {
        if (w[1] / w[0] - 1.0).abs() > C1_CAUCHY_TOL {
            return Err(Error::Convergence(format!(
                "refinement levels disagree: {} vs {}",
                w[0], w[1]
            )));
        }
    }
    let n = estimates.len();
    let extrapolated = 2.0 * estimates[n - 1] - estimates[n - 2];
    Ok(C1Estimate {
        levels: levels.to_vec(),
        estimates,
        extrapolated,
    })
}

/// Contents of the pinned reference file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Reference {
    pub c1: f64,
    pub estimate: C1Estimate,
    pub params: PdeParams,
}

/// The pinned `C₁` reference.
pub fn c1_reference() -> C1Reference {
    serde_json::from_str(C1_REFERENCE_JSON).expect("pinned C1 reference is valid JSON")
}

/// Which regime of the rate proposition a check targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum RateCase {
    /// `√t‖v_t‖₁ → C₁·#A`.
    FiniteSet { count: usize },
    /// `t‖v_t‖₁ → 2λ(A)`.
    Interval { length: f64 },
    /// Log-log slope of `‖v_t‖₁` tends to `−(1+δ)/2`, `δ = log 2/log 3`.
    Cantor { depth: u32 },
}

impl RateCase {
    pub fn name(&self) -> &'static str {
        match self {
            RateCase::FiniteSet { .. } => "finite_set",
            RateCase::Interval { .. } => "interval",
            RateCase::Cantor { .. } => "cantor",
        }
    }
}

/// What to measure and how strictly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRequest {
    pub case: RateCase,
    /// Evaluation time for the finite-set and interval cases.
    pub t_check: f64,
    /// Fit window for the Cantor case.
    pub window: (f64, f64),
    /// Relative for the first two cases, absolute on the exponent for Cantor.
    pub tolerance: f64,
    /// `C₁` used by the finite-set case.
    pub c1: f64,
}

/// One line of the verdict table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub case: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<PowerFit>,
}

impl Verdict {
    pub const CSV_HEADER: &'static str = "case,measured,target,tolerance,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.case, self.measured, self.target, self.tolerance, self.pass
        )
    }
}

/// Minkowski dimension of the ternary Cantor set.
pub fn cantor_dimension() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// Checks one regime against a solved field started at `t_init`.
pub fn rate_report(request: &RateRequest, field: &Field, t_init: f64) -> Result<Verdict> {
    let usable: Vec<f64> = field
        .t_grid
        .iter()
        .copied()
        .filter(|&t| t >= 10.0 * t_init)
        .collect();
    let span = match (usable.first(), usable.last()) {
        (Some(a), Some(b)) => (b / a).log10(),
        _ => 0.0,
    };
    if span < 1.5 - 1e-9 {
        return Err(Error::Window(format!(
            "output spans {span:.2} decades above 10·t_init, need 1.5"
        )));
    }
    let tol = request.tolerance;
    let verdict = |measured: f64, target: f64, pass: bool, fit: Option<PowerFit>| Verdict {
        case: request.case.name().to_string(),
        measured,
        target,
        tolerance: tol,
        pass,
        fit,
    };
    match request.case {
        RateCase::FiniteSet { count } => {
            let t = request.t_check;
            let measured = t.sqrt() * l1_norm(field, t)?;
            let target = request.c1 * count as f64;
            Ok(verdict(measured, target, (measured / target - 1.0).abs() <= tol, None))
        }
        RateCase::Interval { length } => {
            let t = request.t_check;
            let measured = t * l1_norm(field, t)?;
            let target = 2.0 * length;
            Ok(verdict(measured, target, (measured / target - 1.0).abs() <= tol, None))
        }
        RateCase::Cantor { depth } => {
            let (lo, hi) = request.window;
            if !(hi > lo) || lo < 10.0 * t_init {
                return Err(Error::Window(format!(
                    "fit window [{lo}, {hi}] must be nonempty and above 10·t_init"
                )));
            }
            // Below the resolution of the prefix the set looks like a union of
            // intervals and the exponent drifts to -1.
            let floor = 3f64.powi(-2 * depth as i32);
            if lo < floor * (1.0 - 1e-9) {
                return Err(Error::Window(format!(
                    "fit window starts at {lo}, below the prefix scale 3^-2d = {floor}"
                )));
            }
            let mut samples = Vec::new();
            for (k, &t) in field.t_grid.iter().enumerate() {
                if t >= lo * (1.0 - 1e-9) && t <= hi * (1.0 + 1e-9) {
                    samples.push((t, l1_norm(field, field.t_grid[k])?));
                }
            }
            let fit = fit_power_law(&samples)?;
            let target = -(1.0 + cantor_dimension()) / 2.0;
            let pass = (fit.exponent - target).abs() <= tol;
            Ok(verdict(fit.exponent, target, pass, Some(fit)))
        }
    }
}

/// `n` log-spaced times from `a` to `b` inclusive.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && a > 0.0 && b > a);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else {
                (la + (lb - la) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

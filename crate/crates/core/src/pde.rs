//! The singular semilinear heat equation `∂ₜv = ½∂ₓ²v − ½v²` started from an
//! initial trace `(Λ, μ)`.
//!
//! The solver starts at a small time `t_init` from a regularised profile:
//! the cap `2/t_init` on a halo around `Λ`, plus heat-mollified atoms, capped
//! again at `2/t_init`. It then advances by Strang splitting: half a step of
//! the exact reaction flow `v ↦ v / (1 + v·h/2)`, a full diffusion step with
//! zero-Dirichlet boundaries, and another exact half reaction step. Both
//! substeps are order preserving and neither can raise the maximum, so the
//! discrete solution stays nonnegative and below the Kingman envelope `2/t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spde::heat_kernel;
use crate::trace::InitialTrace;

/// Relative slack allowed on the `2/t` envelope post-check.
const ENVELOPE_SLACK: f64 = 1e-9;

/// A nonnegative field sampled on `t_grid × x_grid` with a uniform space grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub t_grid: Vec<f64>,
    pub x_lo: f64,
    pub dx: f64,
    pub nx: usize,
    /// Row-major: `values[k * nx + i]` is the value at `t_grid[k]`, node `i`.
    pub values: Vec<f64>,
}

impl Field {
    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    pub fn x_grid(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn x_hi(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nx..(k + 1) * self.nx]
    }

    /// Index of `t` in the time grid (relative tolerance `1e-9`).
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.t_grid
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(s.abs()))
            .ok_or_else(|| Error::Lookup(format!("time {t} is not on the field's time grid")))
    }

    pub fn at(&self, t: f64) -> Result<&[f64]> {
        Ok(self.row(self.time_index(t)?))
    }

    /// Piecewise-linear interpolation of row `k` at position `x`; zero outside
    /// the grid.
    pub fn interpolate(&self, k: usize, x: f64) -> f64 {
        let s = (x - self.x_lo) / self.dx;
        if !(s >= 0.0) || s > (self.nx - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.nx - 2);
        let w = s - i as f64;
        let row = self.row(k);
        row[i] * (1.0 - w) + row[i + 1] * w
    }

    /// Exact integral of the piecewise-linear interpolant of row `k` over
    /// `[lo, hi] ∩ [x_lo, x_hi]`. Infinite bounds are allowed.
    pub fn integral(&self, k: usize, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.x_lo);
        let hi = hi.min(self.x_hi());
        if !(hi > lo) {
            return 0.0;
        }
        let row = self.row(k);
        let mut total = 0.0;
        for i in 0..self.nx - 1 {
            let (a, b) = (self.x(i), self.x(i + 1));
            let (p, q) = (a.max(lo), b.min(hi));
            if q <= p {
                continue;
            }
            let fa = row[i] + (row[i + 1] - row[i]) * (p - a) / self.dx;
            let fb = row[i] + (row[i + 1] - row[i]) * (q - a) / self.dx;
            total += 0.5 * (fa + fb) * (q - p);
        }
        total
    }
}

/// Trapezoid-rule integral of the field over the whole grid at time `t`.
pub fn l1_norm(field: &Field, t: f64) -> Result<f64> {
    let row = field.at(t)?;
    let n = row.len();
    if n < 2 {
        return Ok(0.0);
    }
    let inner: f64 = row[1..n - 1].iter().sum();
    Ok(field.dx * (inner + 0.5 * (row[0] + row[n - 1])))
}

/// Exact solution `2/t` of `v' = −v²/2` with `v(0) = ∞`.
pub fn kingman_rate(t: f64) -> f64 {
    2.0 / t
}

/// Half-line tail envelope `(c2/t)(1 + x/√t)·exp(−x²/(2t))` for `t > 0`,
/// `x ≥ 0`, `c2 ≥ 2`.
pub fn envelope_halfline(t: f64, x: f64, c2: f64) -> f64 {
    debug_assert!(t > 0.0 && x >= 0.0 && c2 >= 2.0);
    (c2 / t) * (1.0 + x / t.sqrt()) * (-x * x / (2.0 * t)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionScheme {
    /// Backward Euler; unconditionally stable and monotone.
    Implicit,
    /// Forward Euler; requires `dt_max ≤ dx²/2`.
    Explicit,
}

/// Discretisation and regularisation parameters of [`solve_pde`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    /// Start time of the regularised problem; the initial cap is `2/t_init`.
    pub t_init: f64,
    /// Radius of the open neighbourhood of `Λ` initialised at the cap.
    pub lambda_halo: f64,
    pub dx: f64,
    /// Upper bound on the time step.
    pub dt_max: f64,
    /// Time step as a fraction of the current time, `dt = min(dt_max, dt_rel·t)`.
    pub dt_rel: f64,
    /// Margin between the trace support and the Dirichlet boundary.
    pub domain_pad: f64,
    /// Fixed computational domain; derived from the support and the pad when
    /// absent.
    #[serde(default)]
    pub domain: Option<(f64, f64)>,
    pub scheme: DiffusionScheme,
}

impl PdeParams {
    /// Initial cap, equal to the Kingman envelope at `t_init`.
    pub fn cap(&self) -> f64 {
        2.0 / self.t_init
    }

    /// Default parameters for reporting times of order `tau`, up to `t_max`.
    ///
    /// Lengths scale like `√tau` and times like `tau`, so the discrete
    /// problem is exactly self-similar under the parabolic scaling.
    pub fn for_time_scale(tau: f64, t_max: f64) -> Self {
        let s = tau.sqrt();
        Self {
            t_init: 1e-4 * tau,
            lambda_halo: 0.012 * s,
            dx: 0.002 * s,
            dt_max: 0.01 * t_max,
            dt_rel: 0.004,
            domain_pad: 7.0 * t_max.sqrt(),
            domain: None,
            scheme: DiffusionScheme::Implicit,
        }
    }

    /// Refinement level `level`: `dx`, `dt_rel` and `lambda_halo` halve per
    /// level while `t_init` and `dt_max` quarter, which keeps the halo at a
    /// fixed multiple of `√t_init`.
    pub fn refined(&self, level: u32) -> Self {
        let h = 0.5f64.powi(level as i32);
        Self {
            t_init: self.t_init * h * h,
            lambda_halo: self.lambda_halo * h,
            dx: self.dx * h,
            dt_max: self.dt_max * h * h,
            dt_rel: self.dt_rel * h,
            ..self.clone()
        }
    }

    /// Parameters for the problem rescaled by `x ↦ αx`, `t ↦ α²t`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let a2 = alpha * alpha;
        Self {
            t_init: self.t_init * a2,
            lambda_halo: self.lambda_halo * alpha,
            dx: self.dx * alpha,
            dt_max: self.dt_max * a2,
            dt_rel: self.dt_rel,
            domain_pad: self.domain_pad * alpha,
            domain: self.domain.map(|(a, b)| {
                let (p, q) = (alpha * a, alpha * b);
                (p.min(q), p.max(q))
            }),
            scheme: self.scheme,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("t_init", self.t_init),
            ("lambda_halo", self.lambda_halo),
            ("dx", self.dx),
            ("dt_max", self.dt_max),
            ("dt_rel", self.dt_rel),
            ("domain_pad", self.domain_pad),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::param(format!("{name} must be positive, got {value}")));
            }
        }
        if self.scheme == DiffusionScheme::Explicit && self.dt_max > 0.5 * self.dx * self.dx {
            return Err(Error::param(format!(
                "explicit diffusion needs dt_max ≤ dx²/2 = {}, got {}",
                0.5 * self.dx * self.dx,
                self.dt_max
            )));
        }
        Ok(())
    }
}

/// Spatial grid chosen for a trace.
fn domain_for(trace: &InitialTrace, params: &PdeParams) -> Result<(f64, f64)> {
    let hull = trace.support_hull();
    let Some((lo, hi)) = params.domain else {
        let (a, b) = hull.unwrap_or((0.0, 0.0));
        return Ok((a - params.domain_pad, b + params.domain_pad));
    };
    if !(hi > lo) {
        return Err(Error::param(format!("empty domain [{lo}, {hi}]")));
    }
    // A singular set covering the whole domain emulates Λ = ℝ.
    let fills = trace.lambda().contains_set(&crate::trace::IntervalSet::interval(lo, hi));
    if let Some((a, b)) = hull {
        if !fills && (a < lo + params.domain_pad || b > hi - params.domain_pad) {
            return Err(Error::domain(format!(
                "trace support [{a}, {b}] exceeds the padded domain [{}, {}]",
                lo + params.domain_pad,
                hi - params.domain_pad
            )));
        }
    }
    Ok((lo, hi))
}

/// Regularised initial profile at `t_init`.
fn initial_profile(trace: &InitialTrace, params: &PdeParams, x_lo: f64, nx: usize) -> Vec<f64> {
    let cap = params.cap();
    let mut v = vec![0.0; nx];
    for (i, vi) in v.iter_mut().enumerate().take(nx - 1).skip(1) {
        let x = x_lo + i as f64 * params.dx;
        let mut value = if trace.lambda().distance(x) < params.lambda_halo {
            cap
        } else {
            0.0
        };
        for &(xa, w) in trace.mu().atoms() {
            value += w as f64 * heat_kernel(params.t_init, x - xa);
        }
        *vi = value.min(cap);
    }
    v
}

/// Exact flow of `v' = −v²/2` over time `h`.
#[inline]
fn react(v: &mut [f64], h: f64) {
    let c = 0.5 * h;
    for x in v.iter_mut() {
        *x /= 1.0 + *x * c;
    }
}

/// Backward-Euler step of `v' = ½v''` with zero boundary values.
fn diffuse_implicit(v: &mut [f64], r: f64, scratch: &mut Vec<f64>) {
    let n = v.len();
    if n < 3 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    // Thomas algorithm on the interior nodes 1..n-1.
    scratch.clear();
    scratch.resize(n, 0.0);
    let diag = 1.0 + 2.0 * r;
    let mut denom = diag;
    scratch[1] = -r / denom;
    v[1] /= denom;
    for i in 2..n - 1 {
        denom = diag + r * scratch[i - 1];
        scratch[i] = -r / denom;
        v[i] = (v[i] + r * v[i - 1]) / denom;
    }
    for i in (1..n - 2).rev() {
        v[i] -= scratch[i] * v[i + 1];
    }
    v[0] = 0.0;
    v[n - 1] = 0.0;
}

/// Forward-Euler step of `v' = ½v''` with zero boundary values.
fn diffuse_explicit(v: &mut [f64], r: f64, scratch: &mut Vec<f64>) {
    let n = v.len();
    scratch.clear();
    scratch.extend_from_slice(v);
    for i in 1..n - 1 {
        v[i] = scratch[i] + r * (scratch[i - 1] - 2.0 * scratch[i] + scratch[i + 1]);
    }
    v[0] = 0.0;
    v[n - 1] = 0.0;
}

/// Solves the PDE from `trace` and samples the solution at `t_report`.
pub fn solve_pde(trace: &InitialTrace, params: &PdeParams, t_report: &[f64]) -> Result<Field> {
    params.validate()?;
    if t_report.is_empty() {
        return Err(Error::param("no reporting times"));
    }
    if t_report.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("reporting times must be strictly increasing"));
    }
    if !(t_report[0] > params.t_init) || !t_report[t_report.len() - 1].is_finite() {
        return Err(Error::param(format!(
            "reporting times must exceed t_init = {}",
            params.t_init
        )));
    }
    let (lo, hi) = domain_for(trace, params)?;
    let nx = ((hi - lo) / params.dx - 1e-9).ceil() as usize + 1;
    if nx < 3 {
        return Err(Error::param("domain holds fewer than three grid nodes"));
    }

    let mut v = initial_profile(trace, params, lo, nx);
    let mut scratch = Vec::with_capacity(nx);
    let mut values = Vec::with_capacity(nx * t_report.len());
    let mut t = params.t_init;
    for &target in t_report {
        while t < target {
            let mut dt = params.dt_max.min(params.dt_rel * t);
            if t + dt >= target || target - (t + dt) < 1e-3 * dt {
                dt = target - t;
            }
            react(&mut v, 0.5 * dt);
            let r = 0.5 * dt / (params.dx * params.dx);
            match params.scheme {
                DiffusionScheme::Implicit => diffuse_implicit(&mut v, r, &mut scratch),
                DiffusionScheme::Explicit => diffuse_explicit(&mut v, r, &mut scratch),
            }
            react(&mut v, 0.5 * dt);
            t = if dt == target - t { target } else { t + dt };
        }
        check_row(&v, target)?;
        values.extend_from_slice(&v);
    }
    Ok(Field {
        t_grid: t_report.to_vec(),
        x_lo: lo,
        dx: params.dx,
        nx,
        values,
    })
}

fn check_row(v: &[f64], t: f64) -> Result<()> {
    let ceiling = kingman_rate(t) * (1.0 + ENVELOPE_SLACK);
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Envelope(format!("value {x} at node {i}, t = {t}")));
        }
        if x > ceiling {
            return Err(Error::Envelope(format!(
                "value {x} at node {i} exceeds 2/t = {} at t = {t}",
                kingman_rate(t)
            )));
        }
    }
    Ok(())
}

//! Monte-Carlo checks linking the particle system to the Wright–Fisher SPDE
//! (moment duality) and to the PDE (mean particle counts).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::particles::{cbm_ensemble, simulate_cbm, CbmConfig};
use crate::pde::{solve_pde, PdeParams};
use crate::rng::split_seed;
use crate::spde::{solve_spde, SpdeParams};
use crate::trace::{AtomicMeasure, InitialTrace};

/// Largest number of initial particles accepted by [`shiga_check`].
pub const MAX_DUALITY_PARTICLES: u64 = 20;

/// Both sides of the duality identity with their Monte-Carlo errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_mean: f64,
    pub rhs_se: f64,
    pub n_runs_lhs: usize,
    pub n_runs_rhs: usize,
    /// `|lhs − rhs| / √(se_lhs² + se_rhs²)`.
    pub z: f64,
    pub seed_lhs: u64,
    pub seed_rhs: u64,
}

/// Inputs of [`shiga_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShigaConfig {
    pub initial: AtomicMeasure,
    /// Open interval `U`; infinite ends allowed.
    #[serde(with = "crate::io::bound::pair")]
    pub window: (f64, f64),
    pub eps: f64,
    pub t: f64,
    pub runs_lhs: usize,
    pub runs_rhs: usize,
    pub seed: u64,
    /// Particle time step.
    pub h: f64,
    pub pair_cutoff: f64,
    pub offset_jitter: f64,
    /// SPDE grid; its seed is replaced by the derived right-hand seeds.
    pub spde: SpdeParams,
}

fn mean_se(sum: f64, sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let diff = (a - b).abs();
    let se = (sa * sa + sb * sb).sqrt();
    if diff <= 1e-15 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    }
}

/// `u₀ = eps·𝟙_U` on the SPDE grid; a node exactly on an end of `U` gets
/// half weight.
pub fn indicator_profile(params: &SpdeParams, window: (f64, f64), eps: f64) -> Vec<f64> {
    let (lo, hi) = window;
    params.sample(|x| {
        if x > lo && x < hi {
            eps
        } else if x == lo || x == hi {
            0.5 * eps
        } else {
            0.0
        }
    })
}

/// Linear interpolation of a grid row at `x`, honouring periodic wrap.
fn interpolate(row: &[f64], params: &SpdeParams, x: f64) -> f64 {
    let n = row.len();
    let s = (x - params.domain.0) / params.dx;
    let i = s.floor();
    let w = s - i;
    let i = i as usize;
    let next = match params.boundary {
        crate::spde::Boundary::Periodic => (i + 1) % n,
        crate::spde::Boundary::Reflecting => (i + 1).min(n - 1),
    };
    row[i.min(n - 1)] * (1.0 - w) + row[next] * w
}

/// Estimates `E[(1−eps)^{Z_t(U)}]` from particle runs and
/// `E[∏ᵢ(1 − u_t(xᵢ))]` from SPDE runs started at `eps·𝟙_U`.
pub fn shiga_check(config: &ShigaConfig) -> Result<DualityReport> {
    let mass = config.initial.total_mass();
    if mass == 0 || mass > MAX_DUALITY_PARTICLES {
        return Err(Error::param(format!(
            "duality check needs 1..={MAX_DUALITY_PARTICLES} particles, got {mass}"
        )));
    }
    if !(0.0..1.0).contains(&config.eps) {
        return Err(Error::param("eps must lie in [0, 1)"));
    }
    if !(config.window.1 > config.window.0) {
        return Err(Error::param("window must be a nonempty interval"));
    }
    if !(config.t >= 0.0) || config.runs_lhs < 2 || config.runs_rhs < 2 {
        return Err(Error::param("need t ≥ 0 and at least two runs per side"));
    }
    config.spde.validate()?;
    let (a, b) = config.initial.hull().expect("nonempty");
    let pad = 5.0 * config.t.sqrt();
    let (lo, hi) = config.spde.domain;
    if a - pad < lo || b + pad > hi {
        return Err(Error::param(format!(
            "SPDE domain [{lo}, {hi}] must contain the particles with padding {pad}"
        )));
    }

    let seed_lhs = split_seed(config.seed, 0);
    let seed_rhs = split_seed(config.seed, 1);
    let keep = 1.0 - config.eps;

    let cbm = CbmConfig {
        initial: config.initial.clone(),
        h: config.h,
        horizon: config.t,
        pair_cutoff: config.pair_cutoff,
        seed: seed_lhs,
        offset_jitter: config.offset_jitter,
        windows: vec![config.window],
        report_times: vec![config.t],
    };
    let (mut sum, mut sq) = (0.0, 0.0);
    for r in 0..config.runs_lhs as u64 {
        let run = simulate_cbm(&CbmConfig {
            seed: split_seed(seed_lhs, r),
            ..cbm.clone()
        })?;
        let v = keep.powi(run.window_counts[0][0] as i32);
        sum += v;
        sq += v * v;
    }
    let (lhs_mean, lhs_se) = mean_se(sum, sq, config.runs_lhs);

    let u0 = indicator_profile(&config.spde, config.window, config.eps);
    let (mut sum, mut sq) = (0.0, 0.0);
    for r in 0..config.runs_rhs as u64 {
        let params = SpdeParams {
            seed: split_seed(seed_rhs, r),
            ..config.spde.clone()
        };
        let field = solve_spde(&u0, &params, &[config.t])?;
        let row = field.row(0);
        let v: f64 = config
            .initial
            .atoms()
            .iter()
            .map(|&(x, w)| (1.0 - interpolate(row, &params, x)).powi(w as i32))
            .product();
        sum += v;
        sq += v * v;
    }
    let (rhs_mean, rhs_se) = mean_se(sum, sq, config.runs_rhs);

    Ok(DualityReport {
        lhs_mean,
        lhs_se,
        rhs_mean,
        rhs_se,
        n_runs_lhs: config.runs_lhs,
        n_runs_rhs: config.runs_rhs,
        z: z_score(lhs_mean, lhs_se, rhs_mean, rhs_se),
        seed_lhs,
        seed_rhs,
    })
}

/// One row of the mean-count table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCountRow {
    pub t: f64,
    pub mean_count: f64,
    pub count_se: f64,
    pub pde_integral: f64,
    /// `None` when both sides are below [`RATIO_GUARD`].
    pub ratio: Option<f64>,
}

/// Values below this on both sides are not compared.
pub const RATIO_GUARD: f64 = 0.01;

/// Mean `Z_t(U)` over particle replicas against `∫_U v_t dx` for the trace
/// the initial configuration approximates.
pub fn mean_count_vs_pde(
    cbm: &CbmConfig,
    halo_trace: &InitialTrace,
    window: (f64, f64),
    t_list: &[f64],
    replicas: usize,
    pde: &PdeParams,
) -> Result<Vec<MeanCountRow>> {
    let horizon = t_list.iter().cloned().fold(0.0, f64::max);
    let config = CbmConfig {
        horizon,
        windows: vec![window],
        report_times: t_list.to_vec(),
        ..cbm.clone()
    };
    let (_, windows) = cbm_ensemble(&config, replicas)?;
    let field = solve_pde(halo_trace, pde, t_list)?;
    Ok(t_list
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mean_count = windows[0].mean[k];
            let pde_integral = field.integral(k, window.0, window.1);
            let ratio = (mean_count >= RATIO_GUARD || pde_integral >= RATIO_GUARD)
                .then(|| mean_count / pde_integral);
            MeanCountRow {
                t,
                mean_count,
                count_se: windows[0].se[k],
                pde_integral,
                ratio,
            }
        })
        .collect())
}

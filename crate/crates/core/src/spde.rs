//! Wright–Fisher SPDE `∂ₜu = ½u″ + √(u(1−u))·Ẇ` on a uniform grid.
//!
//! One step first applies the explicit heat update
//! `m = u + dt·½Δ_h u`, which is a convex combination of neighbours when
//! `dt ≤ dx²/2`, and then adds noise of conditional variance
//! `(dt/dx)·u(1−u)` per cell. Two noise laws are offered:
//!
//! * [`NoiseLaw::Binomial`] (default) resamples `u' = Bin(K, m)/K` with
//!   `K = dx/dt`. The increment has mean zero and variance `(dt/dx)·m(1−m)`,
//!   so values stay in `[0, 1]` without clipping and the ensemble mean follows
//!   the discrete heat flow exactly.
//! * [`NoiseLaw::GaussianClipped`] uses `u' = clip(m + √(dt/dx)·√(u(1−u))·ξ)`
//!   with standard normal `ξ`. Clipping biases the mean upward where `u` is
//!   small.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::Field;
use crate::rng::{grid_index, split_seed, NoiseStream};

/// Heat kernel `exp(−x²/(2t))/√(2πt)`.
pub fn heat_kernel(t: f64, x: f64) -> f64 {
    debug_assert!(t > 0.0);
    (-x * x / (2.0 * t)).exp() / (std::f64::consts::TAU * t).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Nodes `x_lo + i·dx`, `i < n`, with `x_hi` identified with `x_lo`.
    Periodic,
    /// Nodes `x_lo + i·dx`, `i ≤ n`, with zero-flux ends.
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    Binomial,
    GaussianClipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdeParams {
    pub dx: f64,
    pub dt: f64,
    pub domain: (f64, f64),
    pub boundary: Boundary,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: NoiseLaw,
}

fn default_noise() -> NoiseLaw {
    NoiseLaw::Binomial
}

/// Tolerance for "integer" ratios of grid quantities.
const GRID_TOL: f64 = 1e-9;

fn integer_ratio(a: f64, b: f64) -> Option<u64> {
    let q = a / b;
    let r = q.round();
    ((q - r).abs() <= GRID_TOL * q.max(1.0) && r >= 1.0).then_some(r as u64)
}

impl SpdeParams {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(self.dx > 0.0 && self.dt > 0.0) || !self.dx.is_finite() || !self.dt.is_finite() {
            return Err(Error::param("dx and dt must be positive"));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(format!("empty domain [{lo}, {hi}]")));
        }
        if self.dt > 0.5 * self.dx * self.dx * (1.0 + GRID_TOL) {
            return Err(Error::param(format!(
                "stability needs dt ≤ dx²/2 = {}, got {}",
                0.5 * self.dx * self.dx,
                self.dt
            )));
        }
        if self.dt > self.dx {
            return Err(Error::param("noise scaling needs dt/dx ≤ 1"));
        }
        if integer_ratio(hi - lo, self.dx).is_none() {
            return Err(Error::param("domain length must be a multiple of dx"));
        }
        if self.noise == NoiseLaw::Binomial && integer_ratio(self.dx, self.dt).is_none() {
            return Err(Error::param(format!(
                "binomial noise needs dx/dt to be an integer, got {}",
                self.dx / self.dt
            )));
        }
        Ok(())
    }

    /// Number of grid nodes.
    pub fn nx(&self) -> usize {
        let n = ((self.domain.1 - self.domain.0) / self.dx).round() as usize;
        match self.boundary {
            Boundary::Periodic => n,
            Boundary::Reflecting => n + 1,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.domain.0 + i as f64 * self.dx
    }

    /// Number of binomial trials per cell and step.
    pub fn trials(&self) -> u64 {
        (self.dx / self.dt).round() as u64
    }

    /// Steps needed to reach `t`, which must be a multiple of `dt`.
    pub fn steps_to(&self, t: f64) -> Result<u64> {
        if t == 0.0 {
            return Ok(0);
        }
        integer_ratio(t, self.dt)
            .ok_or_else(|| Error::param(format!("time {t} is not a multiple of dt = {}", self.dt)))
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nx()).map(|i| f(self.x(i))).collect()
    }
}

/// Source of the per-cell randomness, addressed by `(step, cell)`.
pub trait NoiseSource {
    fn uniform(&self, step: u64, cell: usize) -> f64;
    fn normal(&self, step: u64, cell: usize) -> f64;
}

impl NoiseSource for NoiseStream {
    fn uniform(&self, step: u64, cell: usize) -> f64 {
        NoiseStream::uniform(self, grid_index(step, cell))
    }

    fn normal(&self, step: u64, cell: usize) -> f64 {
        NoiseStream::normal(self, grid_index(step, cell))
    }
}

/// Noise field translated by `shift` cells on a periodic grid of `n` cells:
/// cell `i` reads the inner draw of cell `i − shift`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedNoise<N> {
    pub inner: N,
    pub shift: usize,
    pub n: usize,
}

impl<N: NoiseSource> ShiftedNoise<N> {
    fn source(&self, cell: usize) -> usize {
        (cell + self.n - self.shift % self.n) % self.n
    }
}

impl<N: NoiseSource> NoiseSource for ShiftedNoise<N> {
    fn uniform(&self, step: u64, cell: usize) -> f64 {
        self.inner.uniform(step, self.source(cell))
    }

    fn normal(&self, step: u64, cell: usize) -> f64 {
        self.inner.normal(step, self.source(cell))
    }
}

/// Inverse-CDF draw from `Bin(k, p)` using the uniform `u`.
pub fn binomial_inverse(k: u64, p: f64, u: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return k;
    }
    if p > 0.5 {
        return k - binomial_inverse(k, 1.0 - p, 1.0 - u);
    }
    let q = 1.0 - p;
    let ratio = p / q;
    let kf = k as f64;
    let p0 = q.powf(kf);
    if p0 > 1e-280 {
        let (mut pmf, mut cdf) = (p0, p0);
        let mut j = 0u64;
        while cdf < u && j < k {
            pmf *= (kf - j as f64) / (j as f64 + 1.0) * ratio;
            j += 1;
            cdf += pmf;
        }
        return j;
    }
    // Start where the pmf underflows: work in logs.
    let lr = ratio.ln();
    let mut lp = kf * q.ln();
    let mut cdf = lp.exp();
    let mut j = 0u64;
    while cdf < u && j < k {
        lp += ((kf - j as f64) / (j as f64 + 1.0)).ln() + lr;
        j += 1;
        cdf += lp.exp();
    }
    j
}

/// One deterministic heat step `m = u + dt·½Δ_h u`.
fn heat_step(u: &[f64], m: &mut [f64], r: f64, boundary: Boundary) {
    let n = u.len();
    if n == 1 {
        m[0] = u[0];
        return;
    }
    for i in 0..n {
        let (left, right) = match boundary {
            Boundary::Periodic => (u[(i + n - 1) % n], u[(i + 1) % n]),
            Boundary::Reflecting => {
                let l = if i == 0 { u[1] } else { u[i - 1] };
                let rr = if i == n - 1 { u[n - 2] } else { u[i + 1] };
                (l, rr)
            }
        };
        m[i] = (u[i] + r * (left - 2.0 * u[i] + right)).clamp(0.0, 1.0);
    }
}

fn check_initial(f0: &[f64], params: &SpdeParams) -> Result<()> {
    if f0.len() != params.nx() {
        return Err(Error::param(format!(
            "initial field has {} nodes, grid has {}",
            f0.len(),
            params.nx()
        )));
    }
    if let Some((i, v)) = f0.iter().enumerate().find(|(_, &v)| !(0.0..=1.0).contains(&v)) {
        return Err(Error::domain(format!("initial value {v} at node {i} is outside [0, 1]")));
    }
    Ok(())
}

fn check_times(t_report: &[f64]) -> Result<()> {
    if t_report.is_empty() {
        return Err(Error::param("no reporting times"));
    }
    if t_report[0] < 0.0 || t_report.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("reporting times must be nonnegative and increasing"));
    }
    Ok(())
}

/// Solves with the seeded noise of `params.seed`.
pub fn solve_spde(f0: &[f64], params: &SpdeParams, t_report: &[f64]) -> Result<Field> {
    solve_spde_with(f0, params, t_report, &NoiseStream::new(params.seed))
}

/// Solves with an explicit noise source.
pub fn solve_spde_with(
    f0: &[f64],
    params: &SpdeParams,
    t_report: &[f64],
    noise: &impl NoiseSource,
) -> Result<Field> {
    params.validate()?;
    check_initial(f0, params)?;
    check_times(t_report)?;
    let targets: Vec<u64> = t_report.iter().map(|&t| params.steps_to(t)).collect::<Result<_>>()?;

    let nx = params.nx();
    let r = 0.5 * params.dt / (params.dx * params.dx);
    let k = params.trials();
    let sigma = (params.dt / params.dx).sqrt();
    let mut u = f0.to_vec();
    let mut m = vec![0.0; nx];
    let mut values = Vec::with_capacity(nx * targets.len());
    let mut step = 0u64;
    for &target in &targets {
        while step < target {
            heat_step(&u, &mut m, r, params.boundary);
            match params.noise {
                NoiseLaw::Binomial => {
                    for i in 0..nx {
                        let mi = m[i];
                        u[i] = if mi <= 0.0 || mi >= 1.0 {
                            mi
                        } else {
                            binomial_inverse(k, mi, noise.uniform(step, i)) as f64 / k as f64
                        };
                    }
                }
                NoiseLaw::GaussianClipped => {
                    for i in 0..nx {
                        let amp = (u[i] * (1.0 - u[i])).max(0.0).sqrt();
                        let noisy = if amp == 0.0 {
                            m[i]
                        } else {
                            m[i] + sigma * amp * noise.normal(step, i)
                        };
                        u[i] = noisy.clamp(0.0, 1.0);
                    }
                }
            }
            step += 1;
        }
        values.extend_from_slice(&u);
    }
    Ok(Field {
        t_grid: t_report.to_vec(),
        x_lo: params.domain.0,
        dx: params.dx,
        nx,
        values,
    })
}

/// Noise-free evolution of `f0` by the scheme's heat step up to time `t`.
pub fn discrete_heat(f0: &[f64], params: &SpdeParams, t: f64) -> Result<Vec<f64>> {
    params.validate()?;
    check_initial(f0, params)?;
    let steps = params.steps_to(t)?;
    let r = 0.5 * params.dt / (params.dx * params.dx);
    let mut u = f0.to_vec();
    let mut m = vec![0.0; u.len()];
    for _ in 0..steps {
        heat_step(&u, &mut m, r, params.boundary);
        std::mem::swap(&mut u, &mut m);
    }
    Ok(u)
}

/// Heat semigroup `∫G_{t,x−y} f0(y) dy` at the grid nodes, by the trapezoid
/// rule over the nodes. The boundary is honoured by the method of images:
/// periodic copies, or the even extension for reflecting ends.
pub fn continuous_heat(f0: &[f64], params: &SpdeParams, t: f64) -> Vec<f64> {
    if t == 0.0 {
        return f0.to_vec();
    }
    let n = f0.len();
    let (lo, hi) = params.domain;
    let len = hi - lo;
    let reflecting = params.boundary == Boundary::Reflecting;
    let period = if reflecting { 2.0 * len } else { len };
    let copies = (12.0 * t.sqrt() / period).ceil() as i64 + 1;
    let weight = |j: usize| {
        if reflecting && (j == 0 || j == n - 1) {
            0.5
        } else {
            1.0
        }
    };
    (0..n)
        .map(|i| {
            let x = params.x(i);
            let mut total = 0.0;
            for j in (0..n).filter(|&j| f0[j] != 0.0) {
                let y = params.x(j);
                let w = weight(j) * params.dx * f0[j];
                for c in -copies..=copies {
                    let shift = c as f64 * period;
                    total += w * heat_kernel(t, x - y - shift);
                    if reflecting {
                        total += w * heat_kernel(t, x - (2.0 * lo - y) - shift);
                    }
                }
            }
            total
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatReference {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheckOptions {
    pub reference: HeatReference,
    /// Cells whose reference value is below `threshold · max f0` are skipped;
    /// their Monte-Carlo standard errors are not meaningful.
    pub threshold: f64,
}

impl Default for MeanCheckOptions {
    fn default() -> Self {
        Self {
            reference: HeatReference::Continuous,
            threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheckReport {
    pub t: f64,
    pub n_runs: usize,
    pub mc_mean: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub reference: Vec<f64>,
    /// `|mean − reference| / se` per cell; `None` for skipped cells.
    pub z: Vec<Option<f64>>,
    pub max_z: f64,
    pub argmax: Option<usize>,
    pub cells_checked: usize,
}

/// Monte-Carlo mean of `n_runs` replicas (seeds split from `params.seed`)
/// against the heat evolution of `f0`.
pub fn spde_mean_check(
    f0: &[f64],
    t: f64,
    n_runs: usize,
    params: &SpdeParams,
    options: &MeanCheckOptions,
) -> Result<MeanCheckReport> {
    if n_runs < 100 {
        return Err(Error::param("mean check needs at least 100 runs"));
    }
    let nx = params.nx();
    let mut sum = vec![0.0; nx];
    let mut sq = vec![0.0; nx];
    for run in 0..n_runs as u64 {
        let p = SpdeParams {
            seed: split_seed(params.seed, run),
            ..params.clone()
        };
        let field = solve_spde(f0, &p, &[t])?;
        for (i, &v) in field.row(0).iter().enumerate() {
            sum[i] += v;
            sq[i] += v * v;
        }
    }
    let nf = n_runs as f64;
    let mc_mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let mc_se: Vec<f64> = sq
        .iter()
        .zip(&mc_mean)
        .map(|(s, m)| ((s / nf - m * m).max(0.0) * nf / (nf - 1.0) / nf).sqrt())
        .collect();
    let reference = match options.reference {
        HeatReference::Continuous => continuous_heat(f0, params, t),
        HeatReference::Discrete => discrete_heat(f0, params, t)?,
    };
    let fmax = f0.iter().cloned().fold(0.0, f64::max);
    let mut z = vec![None; nx];
    let (mut max_z, mut argmax, mut checked) = (0.0f64, None, 0);
    for i in 0..nx {
        if fmax > 0.0 && reference[i] < options.threshold * fmax {
            continue;
        }
        let diff = (mc_mean[i] - reference[i]).abs();
        let zi = if diff <= 1e-12 {
            0.0
        } else if mc_se[i] > 0.0 {
            diff / mc_se[i]
        } else {
            f64::INFINITY
        };
        z[i] = Some(zi);
        checked += 1;
        if argmax.is_none() || zi > max_z {
            max_z = zi;
            argmax = Some(i);
        }
    }
    Ok(MeanCheckReport {
        t,
        n_runs,
        mc_mean,
        mc_se,
        reference,
        z,
        max_z,
        argmax,
        cells_checked: checked,
    })
}

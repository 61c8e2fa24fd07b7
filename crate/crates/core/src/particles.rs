//! Coalescing Brownian motions with local-time killing, and the Kingman
//! coalescent.
//!
//! Particles carry labels assigned in order of initial position. Particle
//! `i` dies once the local time it has accumulated against lower-labelled
//! live particles exceeds its own budget, an exponential variable of mean 2;
//! the survivor of the pair is the lower label. Local time here is the
//! semimartingale local time at zero of the difference of the two paths.
//!
//! Time is discretised with step `h`. Over one step each particle receives a
//! Gaussian increment, and each close pair is charged the conditional mean of
//! its local time given the two endpoint gaps (the Brownian-bridge formula
//! in [`bridge_local_time_mean`]).
//!
//! Randomness is addressed by label: increments by `(label, step)`, budgets
//! by label. Running a subset of labels under the same seed therefore reuses
//! exactly the same paths and clocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{split_seed, NoiseStream};
use crate::trace::AtomicMeasure;

/// Mean of the exponential killing budgets.
pub const BUDGET_MEAN: f64 = 2.0;

/// Largest label accepted; labels share the noise index with the step.
pub const MAX_LABEL: u64 = (1 << 31) - 1;

/// Scaled complementary error function `exp(z²)·erfc(z)` for `z ≥ 0`.
pub fn erfcx(z: f64) -> f64 {
    if z < 26.0 {
        (z * z).exp() * libm::erfc(z)
    } else {
        let w = 1.0 / (z * z);
        (1.0 - 0.5 * w + 0.75 * w * w) / (z * std::f64::consts::PI.sqrt())
    }
}

/// Expected local time at zero over a step of length `h` of a Brownian motion
/// with variance rate `var_rate`, conditioned to go from `a` to `b`.
///
/// This is `var_rate · ∫₀ʰ g_s(a) g_{h−s}(b) / g_h(b − a) ds` with `g_s` the
/// centred Gaussian density of variance `var_rate·s`; the factor converts
/// occupation density into semimartingale local time.
pub fn bridge_local_time_mean(a: f64, b: f64, h: f64, var_rate: f64) -> f64 {
    debug_assert!(h > 0.0 && var_rate > 0.0);
    let s2h = var_rate * h;
    let z = (a.abs() + b.abs()) / (2.0 * s2h).sqrt();
    // Zero unless the endpoints straddle 0; then the bridge must reach it.
    let e = -((a * b).abs() + a * b) / s2h;
    if e < -745.0 {
        return 0.0;
    }
    0.5 * (std::f64::consts::TAU * s2h).sqrt() * erfcx(z) * e.exp()
}

/// Expected local time `√(2t/π)` at zero of a standard Brownian motion
/// started at zero.
pub fn localtime_clock(t: f64) -> f64 {
    (2.0 * t / std::f64::consts::PI).sqrt()
}

/// Monte-Carlo estimate of `E[L_t]` for a standard Brownian motion from 0,
/// summing per-step bridge means along `paths` discretised paths. Returns
/// `(mean, standard error)`.
pub fn accumulated_local_time(t: f64, h: f64, paths: usize, seed: u64) -> Result<(f64, f64)> {
    if !(t > 0.0 && h > 0.0) || paths < 2 {
        return Err(Error::param("need t > 0, h > 0 and at least two paths"));
    }
    let steps = (t / h).round() as u64;
    let sh = h.sqrt();
    let (mut sum, mut sq) = (0.0, 0.0);
    for p in 0..paths as u64 {
        let noise = NoiseStream::new(split_seed(seed, p));
        let (mut x, mut l) = (0.0f64, 0.0f64);
        for k in 0..steps {
            let y = x + sh * noise.normal(k);
            l += bridge_local_time_mean(x, y, h, 1.0);
            x = y;
        }
        sum += l;
        sq += l * l;
    }
    let n = paths as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// A coalescence: `killed` exhausted its budget against `survivor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub time: f64,
    pub survivor: u64,
    pub killed: u64,
}

/// Per-label random inputs of a particle system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbmNoise {
    increments: NoiseStream,
    budgets: NoiseStream,
}

impl CbmNoise {
    pub fn new(seed: u64) -> Self {
        let base = NoiseStream::new(seed);
        Self {
            increments: base.substream(1),
            budgets: base.substream(2),
        }
    }

    /// Standard normal driving particle `label` during step `step`.
    pub fn increment(&self, label: u64, step: u64) -> f64 {
        self.increments.normal((label << 32) | step)
    }

    pub fn budget(&self, label: u64) -> f64 {
        self.budgets.exponential(label, BUDGET_MEAN)
    }
}

/// Live particles with their residual budgets. Vectors are parallel and in
/// no particular order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystemState {
    pub labels: Vec<u64>,
    pub positions: Vec<f64>,
    pub budgets: Vec<f64>,
    pub time: f64,
    pub step: u64,
    pub events: Vec<MergeEvent>,
}

impl ParticleSystemState {
    /// Particles with the given labels and positions, budgets drawn from
    /// `noise`.
    pub fn new(labels: Vec<u64>, positions: Vec<f64>, noise: &CbmNoise) -> Result<Self> {
        if labels.len() != positions.len() {
            return Err(Error::param("labels and positions differ in length"));
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("labels must be unique"));
        }
        if seen.last().is_some_and(|&l| l > MAX_LABEL) {
            return Err(Error::param(format!("labels must not exceed {MAX_LABEL}")));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("positions must be finite"));
        }
        let budgets = labels.iter().map(|&l| noise.budget(l)).collect();
        Ok(Self {
            labels,
            positions,
            budgets,
            time: 0.0,
            step: 0,
            events: Vec::new(),
        })
    }

    /// Expands `initial` into distinct particles, labelled in position order.
    /// An atom of weight `w` becomes `w` particles spaced by `jitter` and
    /// centred on the atom.
    pub fn from_measure(initial: &AtomicMeasure, jitter: f64, noise: &CbmNoise) -> Result<Self> {
        if !(jitter > 0.0) {
            return Err(Error::param("offset jitter must be positive"));
        }
        let mut positions = Vec::with_capacity(initial.total_mass() as usize);
        let mut previous_hi = f64::NEG_INFINITY;
        for &(x, w) in initial.atoms() {
            let half = 0.5 * (w - 1) as f64 * jitter;
            if x - half <= previous_hi {
                return Err(Error::param(format!(
                    "jittered atom at {x} overlaps its neighbour; reduce offset_jitter"
                )));
            }
            positions.extend((0..w).map(|k| x - half + k as f64 * jitter));
            previous_hi = x + half;
        }
        let labels = (0..positions.len() as u64).collect();
        Self::new(labels, positions, noise)
    }

    pub fn alive(&self) -> usize {
        self.labels.len()
    }

    /// Number of live particles in the open interval `(lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.positions.iter().filter(|&&x| x > lo && x < hi).count()
    }
}

/// Advances the system by one step of length `h`.
///
/// Pairs whose pre-step gap exceeds `cutoff·√(2h)` are ignored. Victims are
/// processed in increasing label order and each charges its lower-labelled
/// partners in increasing label order; a partner that has died earlier in the
/// same step no longer charges.
pub fn step_cbm(state: &mut ParticleSystemState, h: f64, cutoff: f64, noise: &CbmNoise) {
    let n = state.alive();
    let sh = h.sqrt();
    let pre = state.positions.clone();
    for k in 0..n {
        state.positions[k] += sh * noise.increment(state.labels[k], state.step);
    }

    let reach = cutoff * (2.0 * h).sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| pre[i].total_cmp(&pre[j]));
    // (victim label, killer label, victim index, killer index, ΔL)
    let mut charges: Vec<(u64, u64, usize, usize, f64)> = Vec::new();
    for a in 0..n {
        let i = order[a];
        for &j in &order[a + 1..] {
            if pre[j] - pre[i] > reach {
                break;
            }
            let (v, k) = if state.labels[i] > state.labels[j] { (i, j) } else { (j, i) };
            let dl = bridge_local_time_mean(
                pre[v] - pre[k],
                state.positions[v] - state.positions[k],
                h,
                2.0,
            );
            if dl > 0.0 {
                charges.push((state.labels[v], state.labels[k], v, k, dl));
            }
        }
    }
    charges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let time = state.time + h;
    let mut dead = vec![false; n];
    for &(_, killer_label, v, k, dl) in &charges {
        if dead[v] || dead[k] {
            continue;
        }
        state.budgets[v] -= dl;
        if state.budgets[v] <= 0.0 {
            dead[v] = true;
            state.events.push(MergeEvent {
                time,
                survivor: killer_label,
                killed: state.labels[v],
            });
        }
    }
    if dead.iter().any(|&d| d) {
        let mut k = 0;
        state.labels.retain(|_| {
            k += 1;
            !dead[k - 1]
        });
        k = 0;
        state.positions.retain(|_| {
            k += 1;
            !dead[k - 1]
        });
        k = 0;
        state.budgets.retain(|_| {
            k += 1;
            !dead[k - 1]
        });
    }
    state.time = time;
    state.step += 1;
}

fn default_cutoff() -> f64 {
    6.0
}

fn default_jitter() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbmConfig {
    pub initial: AtomicMeasure,
    pub h: f64,
    pub horizon: f64,
    /// Pair interaction range in units of `√(2h)`.
    #[serde(default = "default_cutoff")]
    pub pair_cutoff: f64,
    pub seed: u64,
    #[serde(default = "default_jitter")]
    pub offset_jitter: f64,
    /// Open intervals `U` for which `Z_t(U)` is recorded.
    #[serde(default, with = "crate::io::bound::pairs")]
    pub windows: Vec<(f64, f64)>,
    /// Times (multiples of `h`) at which window counts are recorded.
    #[serde(default)]
    pub report_times: Vec<f64>,
}

impl CbmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::param("time step must be positive"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("horizon must be nonnegative"));
        }
        if !(self.pair_cutoff >= 4.0) {
            return Err(Error::param("pair_cutoff must be at least 4"));
        }
        if self.windows.iter().any(|&(a, b)| !(b > a)) {
            return Err(Error::param("windows must be nonempty intervals"));
        }
        for &t in &self.report_times {
            self.step_of(t)?;
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.horizon / self.h - 1e-9).ceil().max(0.0) as u64
    }

    fn step_of(&self, t: f64) -> Result<u64> {
        let q = t / self.h;
        let k = q.round();
        if !(t >= 0.0) || (q - k).abs() > 1e-6 * q.max(1.0) || k as u64 > self.n_steps() {
            return Err(Error::param(format!(
                "report time {t} is not a step multiple within the horizon"
            )));
        }
        Ok(k as u64)
    }
}

/// Output of one particle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbmRun {
    /// `k·h` for `k = 0..=n_steps`.
    pub times: Vec<f64>,
    pub alive_counts: Vec<usize>,
    pub events: Vec<MergeEvent>,
    pub report_times: Vec<f64>,
    /// `window_counts[w][r]` is `Z_t(U_w)` at `report_times[r]`.
    pub window_counts: Vec<Vec<usize>>,
    /// Live positions at the horizon.
    pub final_positions: Vec<f64>,
}

/// Runs from an explicit state, which is advanced in place.
pub fn run_cbm(
    state: &mut ParticleSystemState,
    config: &CbmConfig,
    noise: &CbmNoise,
) -> Result<CbmRun> {
    config.validate()?;
    let n_steps = config.n_steps();
    let report_steps: Vec<u64> =
        config.report_times.iter().map(|&t| config.step_of(t)).collect::<Result<_>>()?;
    let mut window_counts = vec![vec![0; report_steps.len()]; config.windows.len()];
    let mut times = Vec::with_capacity(n_steps as usize + 1);
    let mut alive_counts = Vec::with_capacity(n_steps as usize + 1);
    let start = state.step;
    let record = |state: &ParticleSystemState, windows: &mut Vec<Vec<usize>>| {
        for (r, &s) in report_steps.iter().enumerate() {
            if s == state.step - start {
                for (w, &(lo, hi)) in config.windows.iter().enumerate() {
                    windows[w][r] = state.count_in(lo, hi);
                }
            }
        }
    };
    times.push(0.0);
    alive_counts.push(state.alive());
    record(state, &mut window_counts);
    for k in 1..=n_steps {
        step_cbm(state, config.h, config.pair_cutoff, noise);
        times.push(k as f64 * config.h);
        alive_counts.push(state.alive());
        record(state, &mut window_counts);
    }
    Ok(CbmRun {
        times,
        alive_counts,
        events: state.events.clone(),
        report_times: config.report_times.clone(),
        window_counts,
        final_positions: state.positions.clone(),
    })
}

/// Runs the configuration with seed `config.seed`.
pub fn simulate_cbm(config: &CbmConfig) -> Result<CbmRun> {
    config.validate()?;
    let noise = CbmNoise::new(config.seed);
    let mut state = ParticleSystemState::from_measure(&config.initial, config.offset_jitter, &noise)?;
    run_cbm(&mut state, config, &noise)
}

/// Sample means and standard errors over replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub replicas: usize,
}

#[derive(Default)]
struct Moments {
    sum: Vec<f64>,
    sq: Vec<f64>,
    n: usize,
}

impl Moments {
    fn add(&mut self, xs: impl ExactSizeIterator<Item = f64>) {
        if self.sum.is_empty() {
            self.sum = vec![0.0; xs.len()];
            self.sq = vec![0.0; xs.len()];
        }
        for (k, x) in xs.enumerate() {
            self.sum[k] += x;
            self.sq[k] += x * x;
        }
        self.n += 1;
    }

    fn finish(self, times: Vec<f64>) -> EnsembleSummary {
        let n = self.n as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let se = self
            .sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                if self.n < 2 {
                    0.0
                } else {
                    ((q / n - m * m).max(0.0) / (n - 1.0)).sqrt()
                }
            })
            .collect();
        EnsembleSummary {
            times,
            mean,
            se,
            replicas: self.n,
        }
    }
}

/// Particle-system ensemble: mean alive count at every step and mean window
/// counts at the report times. Replica `r` uses seed
/// `split_seed(config.seed, r)`.
pub fn cbm_ensemble(
    config: &CbmConfig,
    replicas: usize,
) -> Result<(EnsembleSummary, Vec<EnsembleSummary>)> {
    if replicas == 0 {
        return Err(Error::param("need at least one replica"));
    }
    let mut counts = Moments::default();
    let mut windows: Vec<Moments> = config.windows.iter().map(|_| Moments::default()).collect();
    let mut times = Vec::new();
    for r in 0..replicas as u64 {
        let run = simulate_cbm(&CbmConfig {
            seed: split_seed(config.seed, r),
            ..config.clone()
        })?;
        counts.add(run.alive_counts.iter().map(|&c| c as f64));
        for (m, w) in windows.iter_mut().zip(&run.window_counts) {
            m.add(w.iter().map(|&c| c as f64));
        }
        times = run.times;
    }
    let windows = windows
        .into_iter()
        .map(|m| m.finish(config.report_times.clone()))
        .collect();
    Ok((counts.finish(times), windows))
}

/// Path of a Kingman coalescent started from `n` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingmanPath {
    pub n: u64,
    /// Times at which the block count drops by one, up to the horizon.
    pub jump_times: Vec<f64>,
}

impl KingmanPath {
    pub fn count_at(&self, t: f64) -> u64 {
        self.n - self.jump_times.partition_point(|&s| s <= t) as u64
    }
}

/// Exact simulation: from `k` blocks wait an exponential time of rate
/// `k(k−1)/2`, then merge two blocks.
pub fn simulate_kingman(n: u64, horizon: f64, seed: u64) -> Result<KingmanPath> {
    if n == 0 {
        return Err(Error::param("need at least one block"));
    }
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon must be nonnegative"));
    }
    let noise = NoiseStream::new(seed);
    let mut t = 0.0;
    let mut jump_times = Vec::new();
    for k in (2..=n).rev() {
        let rate = (k * (k - 1)) as f64 / 2.0;
        t += noise.exponential(k, 1.0 / rate);
        if t > horizon {
            break;
        }
        jump_times.push(t);
    }
    Ok(KingmanPath { n, jump_times })
}

/// Mean block counts at `times` over `replicas` Kingman runs.
pub fn kingman_ensemble(
    n: u64,
    times: &[f64],
    seed: u64,
    replicas: usize,
) -> Result<EnsembleSummary> {
    if replicas == 0 {
        return Err(Error::param("need at least one replica"));
    }
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let mut m = Moments::default();
    for r in 0..replicas as u64 {
        let path = simulate_kingman(n, horizon, split_seed(seed, r))?;
        m.add(times.iter().map(|&t| path.count_at(t) as f64));
    }
    Ok(m.finish(times.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Occupation-density integral evaluated by quadrature after
    /// `s = h(1 − cos θ)/2`, which removes the endpoint singularities.
    fn bridge_oracle(a: f64, b: f64, h: f64, var_rate: f64) -> f64 {
        let g = |s: f64, x: f64| {
            (-x * x / (2.0 * var_rate * s)).exp() / (std::f64::consts::TAU * var_rate * s).sqrt()
        };
        let n = 20_000;
        let d = std::f64::consts::PI / n as f64;
        let mut total = 0.0;
        for k in 0..n {
            let th = (k as f64 + 0.5) * d;
            let s = 0.5 * h * (1.0 - th.cos());
            let ds = 0.5 * h * th.sin() * d;
            total += g(s, a) * g(h - s, b) * ds;
        }
        var_rate * total / g(h, b - a)
    }

    #[test]
    fn bridge_mean_matches_quadrature() {
        for &(a, b, h, v) in &[
            (1.0, -1.0, 0.5, 2.0),
            (0.0, 0.0, 1.0, 1.0),
            (0.3, 0.1, 0.2, 1.0),
            (-0.05, 0.02, 1e-3, 2.0),
            (0.2, 0.4, 0.01, 2.0),
        ] {
            let c = bridge_local_time_mean(a, b, h, v);
            let q = bridge_oracle(a, b, h, v);
            assert!((c / q - 1.0).abs() < 1e-6, "{a} {b} {h} {v}: {c} vs {q}");
        }
        assert!((bridge_local_time_mean(0.0, 0.0, 1.0, 1.0) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bridge_mean_far_from_zero_is_negligible() {
        assert!(bridge_local_time_mean(10.0, 10.0, 0.01, 2.0) < 1e-12);
        assert!(bridge_local_time_mean(-3.0, -2.0, 0.01, 2.0) < 1e-12);
        assert!(bridge_local_time_mean(1e3, -1e3, 1e-4, 2.0) >= 0.0);
    }

    #[test]
    fn erfcx_branches_join() {
        let near = (26.0f64 - 1e-9).powi(2).exp() * libm::erfc(26.0 - 1e-9);
        assert!((erfcx(26.0) / near - 1.0).abs() < 1e-6);
        assert_eq!(erfcx(0.0), 1.0);
    }

    #[test]
    fn bridge_mean_matches_monte_carlo() {
        // Fine-step bridge from a to b; local time from the Tanaka formula
        // L = |X_h| − |X_0| − ∫sgn(X)dX.
        let (a, b, h, v) = (1.0f64, -1.0f64, 0.5, 2.0f64);
        let steps = 400;
        let dt = h / steps as f64;
        let noise = NoiseStream::new(2024);
        let runs = 20_000u64;
        let (mut sum, mut sq) = (0.0, 0.0);
        for r in 0..runs {
            // Brownian path W with variance rate v, then the bridge
            // X_s = a + W_s − (s/h)(W_h − (b − a)).
            let mut w = vec![0.0f64; steps + 1];
            for k in 0..steps {
                w[k + 1] = w[k] + (v * dt).sqrt() * noise.normal(r * steps as u64 + k as u64);
            }
            let x: Vec<f64> = (0..=steps)
                .map(|k| {
                    let s = k as f64 * dt;
                    a + w[k] - s / h * (w[steps] - (b - a))
                })
                .collect();
            let mut stoch = 0.0;
            for k in 0..steps {
                stoch += x[k].signum() * (x[k + 1] - x[k]);
            }
            let l = x[steps].abs() - x[0].abs() - stoch;
            sum += l;
            sq += l * l;
        }
        let n = runs as f64;
        let mean = sum / n;
        let se = ((sq / n - mean * mean) / n).sqrt();
        let exact = bridge_local_time_mean(a, b, h, v);
        assert!((mean - exact).abs() < 3.0 * se + 0.01 * exact, "{mean} ± {se} vs {exact}");
    }

    #[test]
    fn clock_values() {
        assert!((localtime_clock(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert!((localtime_clock(std::f64::consts::TAU) - 2.0).abs() < 1e-15);
    }

    fn config(initial: AtomicMeasure, horizon: f64, seed: u64) -> CbmConfig {
        CbmConfig {
            initial,
            h: 1e-3,
            horizon,
            pair_cutoff: 6.0,
            seed,
            offset_jitter: 1e-9,
            windows: vec![],
            report_times: vec![],
        }
    }

    #[test]
    fn single_particle_never_dies() {
        let run = simulate_cbm(&config(AtomicMeasure::dirac(0.0, 1), 1.0, 3)).unwrap();
        assert!(run.alive_counts.iter().all(|&c| c == 1));
        assert!(run.events.is_empty());
    }

    #[test]
    fn distant_pair_does_not_merge() {
        let m = AtomicMeasure::from_positions(&[0.0, 100.0]).unwrap();
        for seed in 0..50 {
            let run = simulate_cbm(&config(m.clone(), 0.1, seed)).unwrap();
            assert_eq!(*run.alive_counts.last().unwrap(), 2);
        }
    }

    #[test]
    fn empty_initial_gives_empty_series() {
        let run = simulate_cbm(&config(AtomicMeasure::zero(), 0.01, 1)).unwrap();
        assert!(run.alive_counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn counts_are_nonincreasing_and_only_higher_labels_die() {
        let mut c = config(AtomicMeasure::dirac(0.0, 50), 0.2, 8);
        c.windows = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        c.report_times = vec![0.0, 0.1];
        let run = simulate_cbm(&c).unwrap();
        assert_eq!(run.alive_counts[0], 50);
        assert_eq!(run.window_counts[0][0], 50);
        assert_eq!(run.window_counts[0][1], run.alive_counts[100]);
        assert!(run.alive_counts.windows(2).all(|w| w[1] <= w[0]));
        let mut killed = std::collections::HashSet::new();
        for e in &run.events {
            assert!(e.survivor < e.killed);
            assert!(!killed.contains(&e.survivor));
            assert!(killed.insert(e.killed));
        }
        assert_eq!(killed.len(), 50 - run.alive_counts.last().unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = config(AtomicMeasure::dirac(0.0, 2), 0.1, 1);
        c.pair_cutoff = 3.0;
        assert!(simulate_cbm(&c).is_err());
        let mut c = config(AtomicMeasure::dirac(0.0, 2), 0.1, 1);
        c.report_times = vec![0.0105];
        assert!(simulate_cbm(&c).is_err());
        let mut c = config(AtomicMeasure::from_positions(&[0.0, 1e-9]).unwrap(), 0.1, 1);
        c.initial = AtomicMeasure::new([(0.0, 5), (1e-9, 1)]).unwrap();
        assert!(simulate_cbm(&c).is_err());
    }

    #[test]
    fn kingman_small_cases() {
        let p = simulate_kingman(1, 10.0, 4).unwrap();
        assert!(p.jump_times.is_empty());
        assert_eq!(p.count_at(5.0), 1);
        let runs = 10_000u64;
        let times: Vec<f64> = (0..runs)
            .map(|r| simulate_kingman(2, f64::INFINITY, split_seed(77, r)).unwrap().jump_times[0])
            .collect();
        let mean = times.iter().sum::<f64>() / runs as f64;
        assert!((mean - 1.0).abs() < 3.0 / (runs as f64).sqrt(), "{mean}");
    }

    #[test]
    fn kingman_counts_step_down() {
        let p = simulate_kingman(100, 1.0, 5).unwrap();
        assert_eq!(p.count_at(0.0), 100);
        assert!(p.jump_times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.count_at(1.0), 100 - p.jump_times.len() as u64);
    }

    #[test]
    fn sublist_is_stochastically_dominated() {
        // Label coupling does not order the two systems pathwise, so compare
        // empirical laws of Z_T(U) across seeds.
        let labels: Vec<u64> = (0..40).collect();
        let positions: Vec<f64> = labels.iter().map(|&l| l as f64 * 0.01).collect();
        let keep: Vec<usize> = (0..40).filter(|k| k % 3 != 1).collect();
        let windows = [(-0.1, 0.15), (0.15, 0.5), (f64::NEG_INFINITY, f64::INFINITY)];
        let runs = 400;
        let mut full_counts = vec![Vec::new(); windows.len()];
        let mut sub_counts = vec![Vec::new(); windows.len()];
        for seed in 0..runs {
            let noise = CbmNoise::new(split_seed(31, seed));
            let mut full =
                ParticleSystemState::new(labels.clone(), positions.clone(), &noise).unwrap();
            let mut sub = ParticleSystemState::new(
                keep.iter().map(|&k| labels[k]).collect(),
                keep.iter().map(|&k| positions[k]).collect(),
                &noise,
            )
            .unwrap();
            for _ in 0..100 {
                step_cbm(&mut full, 1e-3, 6.0, &noise);
                step_cbm(&mut sub, 1e-3, 6.0, &noise);
            }
            for (w, &(lo, hi)) in windows.iter().enumerate() {
                full_counts[w].push(full.count_in(lo, hi));
                sub_counts[w].push(sub.count_in(lo, hi));
            }
        }
        // One-sided two-sample KS bound at level 1e-3.
        let slack = (-(1e-3f64).ln() / runs as f64).sqrt();
        for w in 0..windows.len() {
            for k in 0..=40 {
                let cdf = |v: &Vec<usize>| v.iter().filter(|&&c| c <= k).count() as f64 / runs as f64;
                assert!(cdf(&full_counts[w]) <= cdf(&sub_counts[w]) + slack, "window {w}, k {k}");
            }
        }
    }
}

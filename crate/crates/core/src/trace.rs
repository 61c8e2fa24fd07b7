//! Initial traces `(Λ, μ)`: a singular closed set given as a finite union of
//! closed intervals, plus an integer-weighted atomic measure living off it.
//!
//! Also home to the fractal test sets (ternary Cantor prefixes) and the
//! Minkowski sausage machinery used to estimate their dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{fit_log_log, PowerFit};

/// Maximum Cantor depth accepted by [`make_cantor`].
pub const MAX_CANTOR_DEPTH: u32 = 40;

/// A finite union of closed intervals, kept sorted and pairwise disjoint.
///
/// Overlapping or touching intervals are merged on construction, so two
/// sets describing the same subset of ℝ compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(x: f64) -> Self {
        Self {
            intervals: vec![(x, x)],
        }
    }

    /// The closed interval `[a, b]`. Panics if `b < a` or an endpoint is not
    /// finite; use [`IntervalSet::new`] for fallible construction.
    pub fn interval(a: f64, b: f64) -> Self {
        Self::new([(a, b)]).expect("invalid interval")
    }

    pub fn new(intervals: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (a, b) in intervals {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::param(format!("interval [{a}, {b}] is not finite")));
            }
            if b < a {
                return Err(Error::param(format!("interval [{a}, {b}] has b < a")));
            }
            raw.push((a, b));
        }
        Ok(Self::canonical(raw))
    }

    fn canonical(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Smallest closed interval containing the set.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|&(a, _)| a <= x);
        i > 0 && x <= self.intervals[i - 1].1
    }

    /// True if every interval of `other` lies inside a single interval of
    /// `self` (sets are canonical, so this is plain set inclusion).
    pub fn contains_set(&self, other: &IntervalSet) -> bool {
        other.intervals.iter().all(|&(a, b)| {
            let i = self.intervals.partition_point(|&(lo, _)| lo <= a);
            i > 0 && b <= self.intervals[i - 1].1
        })
    }

    /// Euclidean distance from `x` to the set (infinite for the empty set).
    pub fn distance(&self, x: f64) -> f64 {
        let i = self.intervals.partition_point(|&(a, _)| a <= x);
        let mut d = f64::INFINITY;
        if i > 0 {
            let (_, b) = self.intervals[i - 1];
            d = d.min((x - b).max(0.0));
        }
        if i < self.intervals.len() {
            d = d.min(self.intervals[i].0 - x);
        }
        d
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::canonical(
            self.intervals
                .iter()
                .chain(other.intervals.iter())
                .copied()
                .collect(),
        )
    }

    /// The image of the set under `x ↦ scale·x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> IntervalSet {
        Self::canonical(
            self.intervals
                .iter()
                .map(|&(a, b)| {
                    let (p, q) = (scale * a + shift, scale * b + shift);
                    (p.min(q), p.max(q))
                })
                .collect(),
        )
    }

    /// Smallest positive gap between consecutive intervals, if the set has
    /// more than one interval of positive length. Below this scale a finite
    /// fractal prefix no longer looks self-similar.
    pub fn resolution_scale(&self) -> Option<f64> {
        let fat = self.intervals.iter().filter(|(a, b)| b > a).count();
        if fat < 2 {
            return None;
        }
        self.intervals
            .windows(2)
            .map(|w| w[1].0 - w[0].1)
            .min_by(f64::total_cmp)
    }
}

/// Depth-`depth` prefix of the ternary Cantor construction on `[0, 1]`:
/// `2^depth` intervals of length `3^-depth`.
pub fn make_cantor(depth: u32) -> Result<IntervalSet> {
    if depth > MAX_CANTOR_DEPTH {
        return Err(Error::param(format!(
            "cantor depth {depth} exceeds {MAX_CANTOR_DEPTH}"
        )));
    }
    // Left endpoints are sums of 2·3^-k over the chosen ternary digits.
    let len = 3f64.powi(-(depth as i32));
    let mut lefts = vec![0.0f64];
    for level in 1..=depth {
        let step = 2.0 * 3f64.powi(-(level as i32));
        let mut next = Vec::with_capacity(lefts.len() * 2);
        for &a in &lefts {
            next.push(a);
            next.push(a + step);
        }
        lefts = next;
    }
    Ok(IntervalSet {
        intervals: lefts.into_iter().map(|a| (a, a + len)).collect(),
    })
}

/// Lebesgue measure of the open sausage `A + (−r, r)`.
pub fn sausage_measure(set: &IntervalSet, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param(format!("sausage radius must be positive, got {r}")));
    }
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for &(a, b) in set.intervals() {
        let (lo, hi) = (a - r, b + r);
        current = match current {
            Some((cl, ch)) if lo < ch => Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += ch - cl;
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((cl, ch)) = current {
        total += ch - cl;
    }
    Ok(total)
}

/// Least-squares Minkowski dimension estimate.
///
/// Fits `log λ(A + rB°)` against `log r`; the dimension is `1 − slope`, which
/// is stored in `exponent`. The fit window is reported in `r` units.
pub fn minkowski_dim_fit(set: &IntervalSet, r_values: &[f64]) -> Result<PowerFit> {
    if set.is_empty() {
        return Err(Error::param("dimension of the empty set is undefined"));
    }
    if r_values.len() < 4 {
        return Err(Error::param("need at least 4 radii"));
    }
    if r_values.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::param("radii must be positive and finite"));
    }
    if r_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("radii must be strictly decreasing"));
    }
    let (r_max, r_min) = (r_values[0], r_values[r_values.len() - 1]);
    if r_max / r_min < 100.0 * (1.0 - 1e-9) {
        return Err(Error::param("radii must span at least two decades"));
    }
    if let Some(scale) = set.resolution_scale() {
        if r_min < scale * (1.0 - 1e-9) {
            return Err(Error::Window(format!(
                "radius {r_min} is below the set's resolution scale {scale}"
            )));
        }
    }
    let mut samples = Vec::with_capacity(r_values.len());
    for &r in r_values.iter().rev() {
        samples.push((r, sausage_measure(set, r)?));
    }
    let first = samples[0].1;
    if samples.iter().all(|s| s.1 == first) {
        return Err(Error::Fit("sausage measure is constant over the window".into()));
    }
    let fit = fit_log_log(&samples)?;
    Ok(PowerFit {
        exponent: 1.0 - fit.exponent,
        ..fit
    })
}

/// Atomic measure with positive integer weights at strictly increasing
/// positions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct AtomicMeasure {
    atoms: Vec<(f64, u64)>,
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(x: f64, weight: u64) -> Self {
        Self::new([(x, weight)]).expect("invalid atom")
    }

    /// Builds a canonical measure: atoms sorted, coincident positions merged.
    pub fn new(atoms: impl IntoIterator<Item = (f64, u64)>) -> Result<Self> {
        let mut raw: Vec<(f64, u64)> = Vec::new();
        for (x, w) in atoms {
            if !x.is_finite() {
                return Err(Error::param(format!("atom position {x} is not finite")));
            }
            if w == 0 {
                return Err(Error::param(format!("atom at {x} has zero weight")));
            }
            raw.push((x, w));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, u64)> = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            match atoms.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => atoms.push((x, w)),
            }
        }
        Ok(Self { atoms })
    }

    /// One unit atom per listed position (positions may repeat).
    pub fn from_positions(positions: &[f64]) -> Result<Self> {
        Self::new(positions.iter().map(|&x| (x, 1)))
    }

    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> u64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn weight_at(&self, x: f64) -> u64 {
        self.atoms
            .binary_search_by(|a| a.0.total_cmp(&x))
            .map(|i| self.atoms[i].1)
            .unwrap_or(0)
    }

    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.atoms.first()?.0, self.atoms.last()?.0))
    }
}

/// An initial trace `(Λ, μ)` with `μ` carried by the complement of `Λ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "TraceDoc", into = "TraceDoc")]
pub struct InitialTrace {
    lambda: IntervalSet,
    mu: AtomicMeasure,
}

impl InitialTrace {
    pub fn new(lambda: IntervalSet, mu: AtomicMeasure) -> Result<Self> {
        if let Some(&(x, _)) = mu.atoms().iter().find(|a| lambda.contains(a.0)) {
            return Err(Error::param(format!(
                "atom at {x} lies inside the singular set"
            )));
        }
        Ok(Self { lambda, mu })
    }

    /// `(Λ, 0)`.
    pub fn singular(lambda: IntervalSet) -> Self {
        Self {
            lambda,
            mu: AtomicMeasure::zero(),
        }
    }

    /// `(∅, μ)`.
    pub fn atomic(mu: AtomicMeasure) -> Self {
        Self {
            lambda: IntervalSet::empty(),
            mu,
        }
    }

    pub fn lambda(&self) -> &IntervalSet {
        &self.lambda
    }

    pub fn mu(&self) -> &AtomicMeasure {
        &self.mu
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.is_empty() && self.mu.is_empty()
    }

    /// Smallest interval containing `Λ ∪ supp μ`, `None` for the zero trace.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        match (self.lambda.hull(), self.mu.hull()) {
            (None, None) => None,
            (Some(h), None) | (None, Some(h)) => Some(h),
            (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
        }
    }

    /// Image under `x ↦ scale·x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        let mu = AtomicMeasure::new(self.mu.atoms().iter().map(|&(x, w)| (scale * x + shift, w)))?;
        Self::new(self.lambda.affine(scale, shift), mu)
    }
}

/// Partial order on traces: `Λ_a ⊆ Λ_b` and, off `Λ_b`, every atom of `a`
/// is dominated by the atom of `b` at the same position.
pub fn trace_leq(a: &InitialTrace, b: &InitialTrace) -> bool {
    b.lambda.contains_set(&a.lambda)
        && a
            .mu
            .atoms()
            .iter()
            .filter(|(x, _)| !b.lambda.contains(*x))
            .all(|&(x, w)| w <= b.mu.weight_at(x))
}

/// Wire form: `{"lambda": [[a,b],...], "mu": [[x,w],...]}`.
#[derive(Serialize, Deserialize)]
struct TraceDoc {
    #[serde(default)]
    lambda: Vec<[f64; 2]>,
    #[serde(default)]
    mu: Vec<[f64; 2]>,
}

fn weight_from_f64(w: f64) -> Result<u64> {
    if !(w >= 1.0) || w.fract() != 0.0 || w > 2f64.powi(53) {
        return Err(Error::param(format!("atom weight {w} is not a positive integer")));
    }
    Ok(w as u64)
}

impl TryFrom<Vec<[f64; 2]>> for AtomicMeasure {
    type Error = Error;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        let atoms = pairs
            .into_iter()
            .map(|[x, w]| Ok((x, weight_from_f64(w)?)))
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(atoms)
    }
}

impl From<AtomicMeasure> for Vec<[f64; 2]> {
    fn from(m: AtomicMeasure) -> Self {
        m.atoms.iter().map(|&(x, w)| [x, w as f64]).collect()
    }
}

impl TryFrom<TraceDoc> for InitialTrace {
    type Error = Error;

    fn try_from(doc: TraceDoc) -> Result<Self> {
        let lambda = IntervalSet::new(doc.lambda.iter().map(|p| (p[0], p[1])))?;
        InitialTrace::new(lambda, AtomicMeasure::try_from(doc.mu)?)
    }
}

impl From<InitialTrace> for TraceDoc {
    fn from(t: InitialTrace) -> Self {
        TraceDoc {
            lambda: t.lambda.intervals().iter().map(|&(a, b)| [a, b]).collect(),
            mu: t.mu.into(),
        }
    }
}

//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(key, index)`: there is no hidden
//! generator state, so a value can be looked up in any order and from any
//! thread. Grids address draws by `(step, cell)`, particle systems by
//! `(particle id, step)`. The mixing function is the SplitMix64 finalizer.
//!
//! Seed splitting: replica `r` of a run with root seed `s` uses the seed
//! [`split_seed`]`(s, r)`. This rule is part of the reproducibility contract
//! and must not change between versions.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of replica `replica` from a root seed.
pub fn split_seed(root: u64, replica: u64) -> u64 {
    mix64(root ^ mix64(replica.wrapping_mul(GOLDEN_GAMMA).wrapping_add(STREAM_SALT)))
}

/// A keyed, stateless source of uniform and derived variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStream {
    seed: u64,
    key: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            key: mix64(seed ^ STREAM_SALT),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream derived from this one, e.g. one per variate kind.
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    #[inline]
    pub fn bits(&self, index: u64) -> u64 {
        mix64(self.key ^ mix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA)))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, index: u64) -> f64 {
        ((self.bits(index) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box–Muller from the uniform pair at
    /// `2 * index` and `2 * index + 1`.
    #[inline]
    pub fn normal(&self, index: u64) -> f64 {
        let u1 = self.uniform(index.wrapping_mul(2));
        let u2 = self.uniform(index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Exponential with the given mean.
    #[inline]
    pub fn exponential(&self, index: u64, mean: f64) -> f64 {
        -mean * self.uniform(index).ln()
    }
}

/// Index of the draw for grid cell `cell` at time step `step`.
#[inline]
pub fn grid_index(step: u64, cell: usize) -> u64 {
    (step << 32) | cell as u64
}

//! Numerical toolkit for coalescing Brownian motions, their singular PDE,
//! and the dual Wright–Fisher SPDE.

pub mod duality;
pub mod error;
pub mod io;
pub mod particles;
pub mod pde;
pub mod rates;
pub mod rng;
pub mod spde;
pub mod trace;

pub use error::{Error, Result};
pub use pde::{solve_pde, DiffusionScheme, Field, PdeParams};
pub use rates::{fit_power_law, PowerFit};
pub use rng::{split_seed, NoiseStream};
pub use spde::{solve_spde, Boundary, NoiseLaw, SpdeParams};
pub use trace::{AtomicMeasure, InitialTrace, IntervalSet};

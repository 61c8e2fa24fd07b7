//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Format;

#[derive(Debug, Parser)]
#[command(name = "cbmlab", version, about = "Coalescing Brownian motion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the singular semilinear heat equation from an initial trace.
    Pde(PdeArgs),
    /// Run the stochastic heat equation with Wright-Fisher noise.
    Spde(SpdeArgs),
    /// Simulate coalescing Brownian motions with killing.
    Cbm(CbmArgs),
    /// Kingman coalescent block counts.
    Kingman(KingmanArgs),
    /// Duality checks between particles and the SPDE or the PDE.
    Duality(DualityArgs),
    /// Small-time decay rates of the total mass.
    Rates(RatesArgs),
    /// Sausage measures and dimension fit of a Cantor prefix.
    Cantor(CantorArgs),
    /// Rerun a manifest and compare the outputs byte for byte.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    L1,
    None,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub common: Common,
    /// `point`, `interval`, `cantor` or a JSON trace file.
    #[arg(long)]
    pub trace: Option<String>,
    /// Cantor depth for `--trace cantor`.
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
    /// Reporting times.
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    pub times: Option<Vec<f64>>,
    /// Time scale used to derive default grid parameters.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub t_init: Option<f64>,
    #[arg(long)]
    pub dt_rel: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum, default_value = "l1")]
    pub report: Report,
}

#[derive(Debug, Args)]
pub struct SpdeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Domain as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub noise: Option<String>,
    /// Initial height on the window.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Initial window as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    pub times: Option<Vec<f64>>,
    /// Run the Monte-Carlo mean check with this many runs.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// `continuous` or `discrete`.
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct CbmArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of particles started at `--x0`.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Counting window as `lo,hi`; `inf` and `-inf` allowed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long = "report-times", value_delimiter = ',', num_args = 1..)]
    pub report_times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct KingmanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DualityMode {
    Shiga,
    MeanCount,
}

#[derive(Debug, Args)]
pub struct DualityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: Option<DualityMode>,
    /// Particle positions (shiga mode).
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Number of particles at the origin (mean-count mode).
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    pub times: Option<Vec<f64>>,
    /// Runs per side (shiga) or particle replicas (mean-count).
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateCaseArg {
    FiniteSet,
    Interval,
    Cantor,
    C1,
}

impl RateCaseArg {
    pub fn tag(self) -> &'static str {
        match self {
            RateCaseArg::FiniteSet => "finite_set",
            RateCaseArg::Interval => "interval",
            RateCaseArg::Cantor => "cantor",
            RateCaseArg::C1 => "c1",
        }
    }
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub case: Option<RateCaseArg>,
    /// Atoms of the finite set.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_hyphen_values = true)]
    pub points: Option<Vec<f64>>,
    /// Interval as `a,b`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub interval: Option<Vec<f64>>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub t_check: Option<f64>,
    /// Fit window as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub levels: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct CantorArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Sausage radii, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub manifest: PathBuf,
    /// Also write the rerun outputs here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

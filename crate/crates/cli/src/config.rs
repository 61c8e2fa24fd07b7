//! Resolved run configurations. A run's configuration is built from
//! defaults, then a JSON file, then command-line flags, each layer
//! overriding the previous one.

use serde::{Deserialize, Serialize};

use cbmlab_core::duality::ShigaConfig;
use cbmlab_core::particles::CbmConfig;
use cbmlab_core::pde::PdeParams;
use cbmlab_core::spde::{HeatReference, SpdeParams};
use cbmlab_core::InitialTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A fully resolved run, as echoed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    #[serde(flatten)]
    pub command: CommandConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "run", rename_all = "lowercase")]
pub enum CommandConfig {
    Pde(PdeRun),
    Spde(SpdeRun),
    Cbm(CbmRun),
    Kingman(KingmanRun),
    Duality(DualityRun),
    Rates(RatesRun),
    Cantor(CantorRun),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Pde(_) => "pde",
            CommandConfig::Spde(_) => "spde",
            CommandConfig::Cbm(_) => "cbm",
            CommandConfig::Kingman(_) => "kingman",
            CommandConfig::Duality(_) => "duality",
            CommandConfig::Rates(_) => "rates",
            CommandConfig::Cantor(_) => "cantor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeRun {
    pub trace: InitialTrace,
    pub times: Vec<f64>,
    pub params: PdeParams,
    /// Refinement level applied on top of `params`.
    #[serde(default)]
    pub level: u32,
    /// Write every `stride`-th grid node to the field file.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdeRun {
    pub params: SpdeParams,
    /// `f0 = eps·𝟙_U`, half weight at nodes on the ends of `U`.
    pub eps: f64,
    #[serde(with = "cbmlab_core::io::bound::pair")]
    pub window: (f64, f64),
    pub times: Vec<f64>,
    #[serde(default)]
    pub mean_check: Option<MeanCheckRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheckRun {
    pub runs: usize,
    pub threshold: f64,
    pub reference: HeatReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbmRun {
    pub config: CbmConfig,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingmanRun {
    pub n: u64,
    pub horizon: f64,
    pub replicas: usize,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DualityRun {
    Shiga(ShigaConfig),
    MeanCount(MeanCountRun),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCountRun {
    pub cbm: CbmConfig,
    pub trace: InitialTrace,
    #[serde(with = "cbmlab_core::io::bound::pair")]
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub replicas: usize,
    pub pde: PdeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum RatesRun {
    FiniteSet {
        points: Vec<f64>,
        t_check: f64,
        tolerance: f64,
        c1: f64,
        params: PdeParams,
    },
    Interval {
        a: f64,
        b: f64,
        t_check: f64,
        tolerance: f64,
        params: PdeParams,
    },
    Cantor {
        depth: u32,
        window: (f64, f64),
        points: usize,
        tolerance: f64,
        params: PdeParams,
    },
    /// Recomputes the pinned `C₁` reference.
    C1 { params: PdeParams, levels: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorRun {
    pub depth: u32,
    /// Strictly decreasing radii.
    pub radii: Vec<f64>,
}

use std::path::PathBuf;
use std::str::FromStr;

use causal_compression::{CouplingRule, Estimator};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "causal-compress", version, about = "Sparse causal compression of paired time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample panel from a structural model.
    Synth(SynthArgs),
    /// Causal segmentation of one series relative to the other.
    Segment(SegmentArgs),
    /// Causal bipartite graph between the time points of both series.
    Bipartite(BipartiteArgs),
    /// Calibrate a score threshold on independent null panels.
    Threshold(ThresholdArgs),
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Link specification JSON. Defaults to the built-in fixture.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of rows.
    #[arg(short = 'd', long = "samples", default_value_t = 500)]
    pub d_samples: usize,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    Copula,
    Gaussian,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Copula => Estimator::Copula,
            EstimatorArg::Gaussian => Estimator::Gaussian,
        }
    }
}

/// A literal threshold or a null calibration `null[:reps[:quantile]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    Fixed(f64),
    Null { reps: usize, quantile: f64 },
}

pub const DEFAULT_REPS: usize = 50;
pub const DEFAULT_QUANTILE: f64 = 0.95;

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("null") {
            let mut parts = rest.split(':').skip(1);
            let reps = match parts.next() {
                Some(r) => r.parse().map_err(|_| format!("bad replicate count {r:?}"))?,
                None => DEFAULT_REPS,
            };
            let quantile = match parts.next() {
                Some(q) => q.parse().map_err(|_| format!("bad quantile {q:?}"))?,
                None => DEFAULT_QUANTILE,
            };
            if parts.next().is_some() || !(rest.is_empty() || rest.starts_with(':')) {
                return Err(format!("expected null[:reps[:quantile]], got {s:?}"));
            }
            return Ok(ThresholdMode::Null { reps, quantile });
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or null[:reps[:quantile]], got {s:?}"))?;
        Ok(ThresholdMode::Fixed(v))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Sample panel CSV with header x1..xn,y1..yn.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Copula)]
    pub estimator: EstimatorArg,
    /// Step size of the stagewise solver.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Weight budget; defaults to n / 2.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Score threshold, or `null[:reps[:quantile]]` to calibrate one.
    #[arg(long, default_value = "null")]
    pub threshold: ThresholdMode,
    /// Seed of the null calibration.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use finite differences for every gradient.
    #[arg(long)]
    pub finite_differences: bool,
    /// Result JSON; solution paths go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesArg {
    X,
    Y,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Series whose time points are segmented.
    #[arg(long, value_enum, default_value_t = SeriesArg::X)]
    pub series: SeriesArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingArg {
    Both,
    Either,
}

impl From<CouplingArg> for CouplingRule {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::Both => CouplingRule::Both,
            CouplingArg::Either => CouplingRule::Either,
        }
    }
}

#[derive(Debug, Args)]
pub struct BipartiteArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Graphviz output; defaults to the JSON path with a .dot extension.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Report a coupling when both compressions select the index, or either.
    #[arg(long, value_enum, default_value_t = CouplingArg::Both)]
    pub coupling: CouplingArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Segmentation,
    Bipartite,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Series length.
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(short = 'd', long = "samples", default_value_t = 500)]
    pub d_samples: usize,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    pub quantile: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Which objectives are pooled.
    #[arg(long, value_enum, default_value_t = TaskArg::Segmentation)]
    pub task: TaskArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Copula)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Null score sample CSV.
    #[arg(long)]
    pub out: PathBuf,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(
    name = "lasched",
    version,
    about = "Loss-aware step schedules and error reports for diffusion samplers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Select a schedule from a training-loss profile.
    Schedule(ScheduleArgs),
    /// Tabulate the baseline grids.
    Grids(GridArgs),
    /// Error functionals and bounds per (schedule, K).
    Report(ReportArgs),
    /// Run the reverse sampler and score the samples.
    Simulate(SimulateArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Tabulate mmse and its derivative.
    MmseTable(MmseTableArgs),
    /// Replay a manifest and compare artifact hashes.
    Rerun(RerunArgs),
}

impl Command {
    pub fn common_mut(&mut self) -> Option<&mut Common> {
        match self {
            Command::Schedule(a) => Some(&mut a.common),
            Command::Grids(a) => Some(&mut a.common),
            Command::Report(a) => Some(&mut a.common),
            Command::Simulate(a) => Some(&mut a.common),
            Command::Verify(a) => Some(&mut a.common),
            Command::MmseTable(a) => Some(&mut a.common),
            Command::Rerun(_) => None,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct Endpoints {
    /// Horizon; the first SNR is 1/T.
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    /// Early-stopping time; the last SNR is 1/delta.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TargetArgs {
    /// `circle8`, `grid8`, or a JSON distribution file.
    #[arg(long)]
    pub target: String,
    /// Eight comma-separated toy weights.
    #[arg(long, value_delimiter = ',')]
    pub toy_weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = lasched::toy::DEFAULT_SIGMA0)]
    pub sigma0: f64,
    /// Toy radius or lattice extent.
    #[arg(long, default_value_t = lasched::toy::DEFAULT_RADIUS)]
    pub scale: f64,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct LasArgs {
    #[arg(long, default_value_t = lasched::schedule::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Smoothness weight; 0 selects the exact DP.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 16)]
    pub beam: usize,
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    #[arg(long, default_value_t = 2)]
    pub extra: usize,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
pub struct OracleArgs {
    /// Monte-Carlo samples for mmse where no quadrature is used.
    #[arg(long, default_value_t = 20_000)]
    pub mc_samples: usize,
    /// Force Gauss–Hermite quadrature with this many nodes per axis.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Log-spaced oracle candidates for `las` when no loss is given.
    #[arg(long, default_value_t = 200)]
    pub candidates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridName {
    TimeUniform,
    Geometric,
    Edm,
    Las,
}

impl GridName {
    pub fn label(self) -> &'static str {
        match self {
            GridName::TimeUniform => "time_uniform",
            GridName::Geometric => "geometric",
            GridName::Edm => "edm",
            GridName::Las => "las",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScheduleArgs {
    /// CSV with header `gamma,loss,kind`.
    #[arg(long)]
    pub loss: PathBuf,
    #[arg(long = "K", value_delimiter = ',', default_value = "10")]
    pub steps: Vec<usize>,
    /// Keep only knots with SNR >= 1/T.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Keep only knots with SNR <= 1/delta.
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub las: LasArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    #[arg(long = "K", value_delimiter = ',', default_value = "5,7,10")]
    pub steps: Vec<usize>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "time-uniform,geometric,edm"
    )]
    pub grids: Vec<GridName>,
    #[arg(long, default_value_t = 7.0)]
    pub rho: f64,
    #[command(flatten)]
    pub endpoints: Endpoints,
    #[command(flatten)]
    pub common: Common,
}

/// Grid selection shared by `report` and `simulate`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GridSelection {
    #[arg(long = "K", value_delimiter = ',', default_value = "5,7,10")]
    pub steps: Vec<usize>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "time-uniform,geometric,edm,las"
    )]
    pub grids: Vec<GridName>,
    /// Extra schedule JSON files, used as given.
    #[arg(long = "schedule")]
    pub schedules: Vec<PathBuf>,
    #[arg(long, default_value_t = 7.0)]
    pub rho: f64,
    /// Training-loss profile; drives `las` and the approximation error.
    #[arg(long)]
    pub loss: Option<PathBuf>,
    #[command(flatten)]
    pub endpoints: Endpoints,
    #[command(flatten)]
    pub las: LasArgs,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub selection: GridSelection,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    ExactForward,
    GaussianPrior,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub selection: GridSelection,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "first")]
    pub order: Order,
    #[arg(long, value_enum, default_value = "exact-forward")]
    pub init: Init,
    /// Std of Gaussian error added to every denoiser call.
    #[arg(long)]
    pub sigma_err: Option<f64>,
    /// Also score samples after a final denoising jump.
    #[arg(long)]
    pub final_denoise: bool,
    /// Write every sample set as CSV.
    #[arg(long)]
    pub save_samples: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// dp, beam, mmse, entropy, geometric, identity, sampler or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Replace the built-in targets with this one.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MmseTableArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub endpoints: Endpoints,
    /// Log-spaced SNR points between 1/T and 1/delta.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Defaults to `rerun/` beside the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

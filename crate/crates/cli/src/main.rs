//! `tgdp`: ingest trust graphs, solve covering LPs, simulate protocols,
//! report packing bounds and audit privacy.
//!
//! Exit codes: 0 success, 1 audit failure, 2 usage or parse error, 3 solver
//! or infeasibility error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tgdp", version, about = "Differentially private aggregation over trust graphs")]
pub struct Cli {
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for trial-level parallelism (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an edge list into graph JSON and print its size.
    Ingest(IngestArgs),
    /// Solve the covering LP (or its robust variant).
    Lp(LpArgs),
    /// Run a protocol repeatedly and measure its error.
    Simulate(SimulateArgs),
    /// Packing and dominating-set bounds around the LP optimum.
    Bounds(BoundsArgs),
    /// Certify (or estimate) per-vertex privacy loss.
    Audit(AuditArgs),
    /// Tables over a dataset registry or one graph.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Snap,
    SignedCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Domset,
    Lp,
    Robust,
    Vecsum,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Tgdp,
    Rtgdp,
    Gaps,
}

/// Threshold source shared by several commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ThresholdArgs {
    /// Thresholds `t_v = ⌈α·deg(v)⌉`.
    #[arg(long, conflicts_with = "t_file")]
    pub alpha: Option<f64>,
    /// JSON array with one threshold per vertex.
    #[arg(long)]
    pub t_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, value_enum, default_value = "snap")]
    pub format: InputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    /// Graph JSON or SNAP edge list.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Where to write the cover JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sensitivity bound (grid size for `real`).
    #[arg(long)]
    pub delta: Option<u64>,
    /// zCDP parameter for `vecsum`.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Vector dimension for `vecsum`.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Cover JSON to use instead of solving.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// JSON array of inputs, one per vertex; defaults to the sensitivity bound.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-trial CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON destination.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Debug runs without noise; no privacy.
    #[arg(long)]
    pub noise_disabled: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Run the capped exact packing and dominating-set solvers.
    #[arg(long)]
    pub exact: bool,
    /// Ignore the size caps of the exact solvers.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub packing_cap: Option<usize>,
    #[arg(long)]
    pub domset_cap: Option<usize>,
    /// Randomized rounding statistics of the robust packing dual.
    #[arg(long)]
    pub round: bool,
    /// Rounding slack `α` (with `--round`).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Base thresholds for `--round` and the robust LP.
    #[arg(long)]
    pub t_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub cover: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<u64>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Monte-Carlo view audit instead of the exact statistic audit.
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 0)]
    pub vertex: usize,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Neighbors of `--vertex` that join the adversary (MC audit).
    #[arg(long, value_delimiter = ',')]
    pub excluded: Vec<usize>,
    #[arg(long)]
    pub noise_disabled: bool,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum)]
    pub table: Table,
    /// Dataset registry JSON; relative paths resolve against TGDP_DATA_DIR
    /// or the registry's directory.
    #[arg(long)]
    pub datasets: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Exact dominating sets for `gaps` (capped unless `--force`).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let jobs = config::pick(cli.jobs, &file.jobs).unwrap_or(config::DEFAULT_JOBS).max(1);
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Lp(a) => commands::lp(&a, &file),
        Command::Simulate(a) => commands::simulate(&a, &file, jobs),
        Command::Bounds(a) => commands::bounds(&a, &file),
        Command::Audit(a) => commands::audit(&a, &file),
        Command::Report(a) => commands::report(&a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::AuditFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

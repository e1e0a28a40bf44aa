//! `relicomp`: deterministic, file-based front end to the relicomp library.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relicomp::vn::GateFamily;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "relicomp", version, about = "Noisy Boolean circuits: simulation, exact inference and bounds")]
pub struct Cli {
    /// Worker threads for enumeration and Monte Carlo (results do not depend on it).
    #[arg(long, global = true, env = "RELICOMP_THREADS")]
    pub threads: Option<usize>,

    /// Where to write the run manifest (default: `<output>.manifest.json`, or stderr).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a netlist.
    Validate { file: PathBuf },
    /// Monte Carlo estimate of the per-input error probability.
    Simulate(SimulateArgs),
    /// Apply the restoring-organ construction to a MAJ3 or MIN3 netlist.
    Transform(TransformArgs),
    /// Mutual information, percolation or the full bound chain per input.
    Analyze(AnalyzeArgs),
    /// Threshold table over a range of fan-ins.
    Thresholds(ThresholdArgs),
    /// Feasible intervals of the construction's cubic.
    Roots(RootsArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulate every assignment (the default).
    #[arg(long, conflicts_with = "input")]
    pub all_inputs: bool,
    /// One assignment as a bit string, first input first; repeatable.
    #[arg(long)]
    pub input: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub family: GateFamily,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verify noiseless equivalence with the original on every assignment.
    #[arg(long)]
    pub check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mi,
    Percolation,
    Chain,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub delta: f64,
    /// Restrict to one input, by label.
    #[arg(long)]
    pub input_node: Option<String>,
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Monte Carlo percolation instead of exact enumeration.
    #[arg(long)]
    pub mc: bool,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Inclusive fan-in range `A..B`.
    #[arg(long, default_value = "2..50")]
    pub k_range: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add the `gap_ratio` column.
    #[arg(long)]
    pub gap_ratio: bool,
    #[arg(long, default_value_t = 6)]
    pub digits: usize,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub family: GateFamily,
    #[arg(long, value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    /// CSV summary `family,delta,eta_lo,eta_hi`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-δ cubic curves `eta,p_value`.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long, default_value_t = 501)]
    pub points: usize,
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A second configuration (replay) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(arguments: Vec<String>) -> CliResult<()> {
    let cli = match Cli::try_parse_from(std::iter::once("relicomp".to_string()).chain(arguments.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    configure_threads(cli.threads)?;
    commands::dispatch(cli, arguments)
}

fn main() -> ExitCode {
    match run(std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Command-line pipelines: `gen-synth`, `train`, `evaluate` and
//! `arima-compare`.
//!
//! Every command resolves its parameters from flags, then an optional
//! `--config` file of `key=value` lines, then defaults. The resolved values
//! form a manifest that names the run directory
//! (`<out>/<tag>-<12 hex digits of its SHA-256>`) and is stored in it as
//! `manifest.txt`; passing that file back through `--config` replays the run.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_arima_compare, cmd_evaluate, cmd_gen_synth, cmd_train, TABLE_B_HEADER};
pub use config::{parse_config, read_config, Manifest, RunDir, MANIFEST_FILE};

use crate::griddata::SplitScheme;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "windfield",
    version,
    about = "Gridded wind-speed forecasting: synthesis, training, evaluation, ARIMA comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic hourly grid series and write it as a WNDF file.
    GenSynth(GenSynthArgs),
    /// Train the composite network; writes a checkpoint and the loss history.
    Train(TrainArgs),
    /// Score a checkpoint against persistence and monthly means.
    Evaluate(EvaluateArgs),
    /// Paired comparison with BIC-selected ARIMA at five ranked locations.
    ArimaCompare(ArimaCompareArgs),
}

/// Options shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Key-value config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parent directory of the run directory [default: runs].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run directory prefix [default: the command name].
    #[arg(long)]
    pub tag: Option<String>,
}

/// `6h` or `24h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeArg(pub SplitScheme);

impl FromStr for SchemeArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "6h" => Ok(Self(SplitScheme::SixHour)),
            "24h" => Ok(Self(SplitScheme::TwentyFourHour)),
            other => Err(format!("unknown scheme {other:?}; expected 6h or 24h")),
        }
    }
}

impl fmt::Display for SchemeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SplitScheme::SixHour => write!(f, "6h"),
            SplitScheme::TwentyFourHour => write!(f, "24h"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GenSynthArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Series length in hours.
    #[arg(long)]
    pub hours: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub base_mean: Option<f64>,
    #[arg(long)]
    pub season_amplitude: Option<f64>,
    #[arg(long)]
    pub period_hours: Option<usize>,
    #[arg(long)]
    pub smooth_radius: Option<usize>,
    #[arg(long)]
    pub ar_coefficient: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub start_month: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Hourly WNDF grid file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// L2 penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// RMSprop learning rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// RMSprop squared-gradient decay.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Nesterov momentum (0 disables it).
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Seed for initialization and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for training-anchor subsampling.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Fraction of admissible training anchors kept.
    #[arg(long)]
    pub train_rate: Option<f64>,
    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Observed speeds below this are left out of relative errors.
    #[arg(long)]
    pub relative_floor: Option<f64>,
    /// Level of the joint confidence region.
    #[arg(long)]
    pub confidence_alpha: Option<f64>,
    /// Also report bias-corrected network errors.
    #[arg(long)]
    pub bias_correct: Option<bool>,
    /// Clamp negative network predictions at zero.
    #[arg(long)]
    pub clamp_negative: Option<bool>,
    /// Largest lag for the autocorrelation of the spatial-mean error.
    #[arg(long)]
    pub acf_max_lag: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ArimaCompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test anchors drawn per calendar month.
    #[arg(long)]
    pub anchors_per_month: Option<usize>,
    /// Hours of history behind each anchor used to fit ARIMA.
    #[arg(long)]
    pub window_hours: Option<usize>,
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(long)]
    pub q_max: Option<usize>,
    /// Seed for anchor sampling.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs one command and returns its run directory.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::ArimaCompare(a) => cmd_arima_compare(a),
    }
}

/// Applies `WF_THREADS` to the global worker pool: `0` runs serially,
/// `n > 0` caps the pool at `n` threads.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("WF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("WF_THREADS={raw:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Entry point for the binary.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| run(&cli));
    match outcome {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Command-line front end: `ats2s <train|eval|predict|gradcheck|synth|experiment>`.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 runtime
//! failure. Log verbosity follows the `ATS2S_LOG` environment variable.

mod commands;
mod config;
mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{known_keys, parse_override, read_table, validate_config, DataSource, RunConfig};
pub use pipeline::{evaluate, load_raw, prepare, Prepared, RawData};

use crate::data::DataError;
use crate::eval::EvalError;
use crate::model::{ConfigIssue, ModelError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable holding an `env_logger` filter.
pub const LOG_ENV: &str = "ATS2S_LOG";

/// Checkpoint file name inside the output directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.ats2s";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(issues) => CliError::Config(issues),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ats2s", version, about = "Attention seq2seq remaining-useful-life estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every data-driven subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (default: the `out_dir` key, else `out`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Configuration overrides such as `alpha=0.1`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Basic seq2seq, +reconstruction, +attention, full model.
    Ablation,
    /// Encoder, decoder and combined predictor features.
    Features,
    /// Reconstruction weights from `--values`.
    Alpha,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model; writes the checkpoint, history.csv and, with test data, report.csv.
    Train(CommonArgs),
    /// Score a checkpoint on the configured test engines; writes report.csv.
    Eval {
        /// Defaults to `<out>/checkpoint.ats2s`.
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate the RUL of one engine from its last window.
    Predict {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "ID")]
        engine: u32,
        /// C-MAPSS trajectory file; defaults to the configured test data.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Finite-difference check of the full model's joint-loss gradient.
    Gradcheck {
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "H")]
        epsilon: Option<f64>,
    },
    /// Write a synthetic fleet as C-MAPSS text files.
    Synth(CommonArgs),
    /// Train and score every variant of a suite and tabulate the results.
    Experiment {
        #[arg(value_enum)]
        suite: Suite,
        /// Comma-separated reconstruction weights for the alpha suite.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs one invocation, writing results to `out` and diagnostics to `err`;
/// returns the process exit code.
pub fn run_with_output<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(common) => commands::train(&common, out),
        Command::Eval { checkpoint, common } => commands::eval(&common, checkpoint, out),
        Command::Predict { checkpoint, engine, input, common } => commands::predict(&common, &checkpoint, engine, input, out),
        Command::Gradcheck { seed, epsilon } => commands::gradcheck(seed, epsilon, out),
        Command::Synth(common) => commands::synth(&common, out),
        Command::Experiment { suite, values, common } => commands::experiment(&common, suite, values, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with_output`] on the process's standard streams.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    // Unlocked handles: worker threads log to stderr while a command runs.
    run_with_output(args, &mut std::io::stdout(), &mut std::io::stderr())
}

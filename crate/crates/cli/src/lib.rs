//! The `cwb` command-line tool.
//!
//! Exit codes: 0 on success, 2 when the request is invalid (bad flags, missing
//! columns, malformed configs), 1 when a valid request fails while running.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<cwb::Error> for CliError {
    fn from(e: cwb::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "cwb", version, about = "Continuous weight balancing for skewed traits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append density-ratio weights to a CSV.
    Weigh(WeighArgs),
    /// Dump the trait's KDE on an even grid.
    Density(DensityArgs),
    /// Append discrete (binned) baseline weights to a CSV.
    Baseline(BaselineArgs),
    /// Run every scheme and seed of a config and write reports.
    Reproduce(ReproduceArgs),
}

/// Where the trait comes from.
#[derive(Debug, Clone, Args)]
pub struct TraitArgs {
    /// Input CSV. Defaults to the schema's data file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Trait column, or `label` to use the schema's label.
    #[arg(long = "trait")]
    pub trait_column: Option<String>,
    /// Dataset schema file (TOML).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Run config; supplies the schema, target and weight options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Cell value treated as missing.
    #[arg(long)]
    pub missing: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct WeightFlags {
    /// Lower bound on the source density.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Cap raw weights at this value before normalizing.
    #[arg(long)]
    pub clip: Option<f64>,
    /// Keep raw ratios instead of rescaling to mean one.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct WeighArgs {
    #[command(flatten)]
    pub source: TraitArgs,
    /// Target as JSON, e.g. '{"kind":"normal","mu":3,"sigma":1}'.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub weights: WeightFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub source: TraitArgs,
    /// Number of grid points.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Fixed bandwidth instead of Scott's rule.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub source: TraitArgs,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated seeds, replacing the config's list.
    #[arg(long, value_delimiter = ',', alias = "seed")]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    pub weights: WeightFlags,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Weigh(args) => commands::weigh(&args),
        Command::Density(args) => commands::density(&args),
        Command::Baseline(args) => commands::baseline(&args),
        Command::Reproduce(args) => commands::reproduce(&args),
    }
}

/// Parse arguments, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

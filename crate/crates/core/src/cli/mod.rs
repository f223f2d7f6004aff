//! Config-driven command surface: ingest, train, predict, backtest, report,
//! compare. Every command reads one experiment config and writes under its
//! output directory, indexed by `run-manifest.json`.

mod artifacts;
mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use artifacts::{archive_dir, DatasetArtifact, Layout, RunManifest};
pub use commands::{cmd_backtest, cmd_compare, cmd_ingest, cmd_predict, cmd_report, cmd_train, load_dataset};
pub use config::{BacktestSection, DataSection, EnvSection, ExperimentConfig, SCHEMA_VERSION};

use crate::backtest::BacktestError;
use crate::data::DataError;
use crate::env::EnvError;
use crate::forecast::ForecastError;
use crate::ppo::PpoError;

/// Log verbosity (`error`..`trace`, or env_logger filter syntax).
pub const LOG_ENV: &str = "HYBRID_ALLOC_LOG";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("missing prerequisite: {0}")]
    Missing(String),
    #[error("numerical divergence: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::Diverged { .. } => CliError::Diverged(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PpoError> for CliError {
    fn from(e: PpoError) -> Self {
        match e {
            PpoError::Diverged { .. } | PpoError::TrainingDiverged { .. } => CliError::Diverged(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        match e {
            BacktestError::MissingInput { .. } => CliError::Missing(e.to_string()),
            BacktestError::Policy(p) => p.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Forecaster,
    Allocator,
    All,
}

#[derive(Debug, Parser)]
#[command(name = "hybrid-alloc", version, about = "Forecast-augmented sparse portfolio allocation")]
pub struct Cli {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long, global = true, default_value = "experiment.toml")]
    pub config: PathBuf,
    /// Override the config's global seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, align and resample prices; persist returns and the split.
    Ingest,
    /// Train forecasters, allocators, or both.
    Train {
        #[arg(long, value_enum, default_value = "all")]
        stage: Stage,
    },
    /// Recompute forecasts from saved forecaster checkpoints.
    Predict,
    /// Evaluate all configured strategies on the test rows.
    Backtest,
    /// Print and save a report of the latest backtest.
    Report,
    /// Compare this run's table with another output directory.
    Compare {
        #[arg(long)]
        against: PathBuf,
    },
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

/// Execute a parsed command line; the result maps to the process exit code.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Ingest => {
            let hash = cmd_ingest(&cfg)?;
            println!("dataset sha256 {hash}");
        }
        Command::Train { stage } => cmd_train(&cfg, *stage)?,
        Command::Predict => cmd_predict(&cfg)?,
        Command::Backtest => {
            let c = cmd_backtest(&cfg)?;
            print!("{}", c.to_text());
        }
        Command::Report => print!("{}", cmd_report(&cfg)?),
        Command::Compare { against } => {
            let (_, text) = cmd_compare(&cfg, against)?;
            print!("{text}");
        }
    }
    Ok(())
}

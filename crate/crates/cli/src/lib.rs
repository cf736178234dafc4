//! Command-line orchestration: configuration, experiment commands and the
//! CSV, JSON and SVG files they write.

pub mod commands;
pub mod config;
pub mod plot;

use clap::{Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;

pub use commands::run;
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "dcm", about = "Loss sweeps and resonance analysis for radial doubly complementary media")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the per-degree solves.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for the sampled verification checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the medium and check its transformation identities.
    Build,
    /// Fields at the configured points, at the smallest loss of the ladder.
    Solve,
    /// Loss sweep for the configured source.
    Sweep,
    /// Scan dipole radii for the change from blow-up to boundedness.
    Critical,
    /// Self-tests of the special functions and transforms.
    Verify,
    /// Print the effective configuration as TOML.
    Config,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Critical => "critical",
            Command::Verify => "verify",
            Command::Config => "config",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureClass {
    Validation,
    Numerical,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Validation => 2,
            FailureClass::Numerical => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FailureClass::Validation => "validation",
            FailureClass::Numerical => "numerical",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CliError {
    pub class: FailureClass,
    pub message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError {
            class: FailureClass::Validation,
            message: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError {
            class: FailureClass::Numerical,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.class.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<dcm_core::Error> for CliError {
    fn from(e: dcm_core::Error) -> Self {
        let class = if e.is_validation() {
            FailureClass::Validation
        } else {
            FailureClass::Numerical
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    // an unreadable config or unwritable output directory is bad input
    fn from(e: std::io::Error) -> Self {
        CliError::validation(format!("i/o: {e}"))
    }
}

/// Load the configuration and apply the command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::validation(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.out {
        cfg.output.dir = d.to_string_lossy().into_owned();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.output.plot |= cli.plot;
    cfg.validate()?;
    Ok(cfg)
}

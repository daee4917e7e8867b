//! Command-line front end: presets, configuration and CSV output for the
//! `solve`, `sweep` and `verify` commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use args::{Cli, Command, ProblemArgs, VerifyArgs};
pub use config::{Preset, RunConfig, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input file.
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solve(#[from] extremal_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } => 2,
            CliError::Io { .. } | CliError::Solve(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Output was written but a solve did not converge or a residual test
    /// failed.
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 1,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Solve(a) => {
            let cfg = RunConfig::resolve(&config::merged_entries(a)?, &cli.out_dir)?;
            commands::run_solve(&cfg)
        }
        Command::Sweep(a) => {
            let cfg = RunConfig::resolve(&config::merged_entries(a)?, &cli.out_dir)?;
            commands::run_sweep(&cfg)
        }
        Command::Verify(a) => commands::run_verify(a, &cli.out_dir),
    }
}

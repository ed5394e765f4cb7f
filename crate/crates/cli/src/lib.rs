//! Experiment harness: configuration, policy solving, simulation sweeps and
//! policy comparison, with deterministic CSV output.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use cac_core::error::{ModelError, SimError, SolverError};

/// Top-level command errors, mapped to process exit codes:
/// config 2, solver 3, simulation/verification 4, I/O 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(#[from] SolverError),

    #[error("simulation error: {0}")]
    Sim(#[from] SimError),

    #[error("verification failed: {failures} of {total} checks")]
    Verification { failures: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Sim(_) | CliError::Verification { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Sim(_) => "simulation",
            CliError::Verification { .. } => "verification",
            CliError::Io(_) => "io",
        }
    }
}

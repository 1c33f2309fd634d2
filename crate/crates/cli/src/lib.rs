//! Library behind the `averager` binary: config handling, the four
//! subcommands and their file output.

// Negated comparisons route NaN to the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{run, Command, RunOutput};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("oracle mismatch: max deviation {deviation:e} exceeds {tolerance:e}")]
    OracleMismatch { deviation: f64, tolerance: f64 },
    #[error("found {found} of {expected} predicted orbits at eps = {eps}")]
    Shortfall { eps: f64, found: usize, expected: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Hypothesis(_) => 2,
            CliError::OracleMismatch { .. } => 3,
            CliError::Shortfall { .. } => 4,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    /// Overrides `output_dir` from the config.
    pub out: Option<PathBuf>,
    pub json: bool,
    pub quiet: bool,
}

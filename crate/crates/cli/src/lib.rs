//! Command-line front end: config loading, experiment runs, CSV I/O, external
//! fits, and the acceptance suite.

// Config validations use `!(x > 0.0)` so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod csvio;
pub mod experiments;

use thiserror::Error;

/// CLI-level failures, mapped onto exit codes by the binary: configuration
/// problems exit 2, fit/criterion failures exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(transparent)]
    Core(#[from] biphoton_core::error::Error),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Csv { .. } => 2,
            CliError::Core(_) => 1,
        }
    }
}

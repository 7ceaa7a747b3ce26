//! CLI error type with process exit codes: 2 validation, 3 numerical,
//! 4 I/O.

use std::path::Path;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<hawkes_align::Error> for CliError {
    fn from(err: hawkes_align::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}

/// Attach the offending path to an I/O failure.
pub fn io_error(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

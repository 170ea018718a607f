//! CLI error type carrying the process exit code.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 1).
    Usage(String),
    /// Problems with file contents, schemas or model documents (exit 2).
    Data(String),
    /// States that indicate a bug (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Internal(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<gaussboost::Error> for CliError {
    fn from(e: gaussboost::Error) -> Self {
        match e {
            gaussboost::Error::Internal(msg) => CliError::Internal(msg),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

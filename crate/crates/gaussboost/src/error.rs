//! Crate-wide error type.

/// Errors produced by training, prediction, evaluation and model I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller-supplied data or configuration violates a documented contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A NaN or infinite value was found during data ingestion.
    #[error("non-finite value at row {row}, column {column} ({name})")]
    NonFinite {
        row: usize,
        column: usize,
        name: String,
    },

    /// A computation would overflow to infinity; reported instead of returned.
    #[error("numeric overflow: {0}")]
    Overflow(String),

    /// A model document could not be parsed or fails validation.
    #[error("model format error: {0}")]
    ModelFormat(String),

    /// A state the implementation considers impossible.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

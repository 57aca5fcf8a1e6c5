use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Linear solver failure, with a condition diagnostic when available.
    #[error("solver error: {0}")]
    Solver(String),
    /// Structurally invalid data (non-monotone arrays, non-positive values, ...).
    #[error("data error: {0}")]
    Data(String),
    /// Request would exceed a sanity limit (memory, atom counts).
    #[error("resource error: {0}")]
    Resource(String),
    /// Malformed cache or report file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

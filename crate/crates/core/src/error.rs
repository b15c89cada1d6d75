//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A structurally broken MRT record. `offset` is the byte position of the
    /// record header within the input stream.
    #[error("malformed MRT record at byte {offset}: {reason}")]
    MalformedRecord { offset: u64, reason: String },

    /// A bad line in an event-log or matrix CSV file (1-based line number).
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },

    /// An event that violates the per-kind field invariants.
    #[error("invalid event at index {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },

    #[error("input events are not sorted by timestamp")]
    UnsortedInput,

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    /// Correlation over a constant series is undefined.
    #[error("degenerate correlation: {0}")]
    DegenerateCorrelation(String),

    /// Parameter validation failure (ranges, factors, grid sizes, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Malformed artifact file (matrix CSV, model file, sidecar, config).
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    pub(crate) fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn line(line: usize, reason: impl Into<String>) -> Self {
        Error::Line {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(reason: impl Into<String>) -> Self {
        Error::InvalidParam(reason.into())
    }
}

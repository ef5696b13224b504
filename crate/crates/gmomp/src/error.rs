//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (length {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("column {index} has zero norm and cannot be normalized")]
    ZeroColumn { index: usize },
    #[error("pattern assigns more than one atom to measurement {measurement}")]
    PatternConflict { measurement: usize },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("file format: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by files or their encoding rather than by the
    /// mathematical contents of a request.
    pub fn is_io_or_format(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Format(_)
        )
    }
}

//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A malformed record in a dataset file, with its 1-based position.
    #[error("{path}: {location}: {message}")]
    Record {
        path: PathBuf,
        /// "line N" for JSONL, "row N" for CSV data rows.
        location: String,
        message: String,
    },

    /// A precondition violation (bad sizes, mismatched dimensions, invalid config).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation that needs at least two classes saw only one.
    #[error("degenerate labels: {0}")]
    SingleClass(String),

    /// The optimizer produced a non-finite objective.
    #[error("non-finite loss at iteration {iteration}")]
    NonFinite { iteration: usize },

    /// A prediction backend failed after exhausting its retries.
    #[error("backend error: {0}")]
    Backend(String),

    /// A model bundle or pool cache could not be decoded.
    #[error("bundle error: {0}")]
    Bundle(String),
}

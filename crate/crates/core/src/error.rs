use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the aggregation and planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("normalization undefined for series `{0}`: all values are zero")]
    NormalizationUndefined(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("scenario set is empty")]
    EmptySet,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{count} investment candidates exceed the enumeration limit of {limit} (raise it with --enum-limit)")]
    Capacity { count: usize, limit: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("invalid system model: {0}")]
    Validation(String),

    #[error("LP backend failed on day {day} ({context}): {source}")]
    Backend {
        day: usize,
        context: String,
        #[source]
        source: crate::lp::LpError,
    },

    #[error("{0} is unavailable: a reference solution is required")]
    Unavailable(&'static str),

    #[error("feedback configuration error in loop {loop_index}: {message}")]
    Config { loop_index: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

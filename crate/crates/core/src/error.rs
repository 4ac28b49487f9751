use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("result space too large: {0}")]
    SizeLimit(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty trial sequence")]
    EmptyTrials,

    #[error("standardization undefined for `{name}`: lower bound {inf} is not below the bound {bound}")]
    StandardizationUndefined { name: String, inf: f64, bound: f64 },

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` has (near-)zero standard deviation over the calibration rows")]
    DegenerateColumn(String),

    #[error("shifted system is not numerically positive definite (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("tr(I - H) = {trace:e} is below 1e-12 at lambda = {lambda:e}")]
    DegenerateTrace { lambda: f64, trace: f64 },

    #[error("GCV objective is flat over the search grid (fallback lambda {fallback_lambda:e})")]
    FlatObjective { fallback_lambda: f64 },

    #[error("invalid holdout block length {n_v} for a series of length {n}")]
    InvalidBlockLength { n: usize, n_v: usize },

    #[error("weight vector must sum to one (sum = {0})")]
    InvalidWeights(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: years are not consecutive annual values")]
    NonAnnualYears { path: PathBuf, line: usize },

    #[error("{path}: line {line}: non-finite value")]
    NonFiniteValue { path: PathBuf, line: usize },

    #[error("{path}: proxy years do not match the target years ({message})")]
    YearMismatch { path: PathBuf, message: String },

    #[error("reports have different block structure")]
    BlockMismatch,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

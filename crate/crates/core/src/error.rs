use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension d = {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("coupling a = {a} outside tabulated range [{min}, {max}]")]
    Extrapolation { a: f64, min: f64, max: f64 },

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("stability error: {0}")]
    Stability(String),

    #[error("kernel table does not cover the mass grid: {0}")]
    TableCoverage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular scaling: eta + phi*d/2 = 1 for phi = {phi}, eta = {eta}, d = {dim}")]
    SingularScaling { phi: f64, eta: f64, dim: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
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

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no strata retained after matching")]
    NoMatches,

    #[error("pooled covariance is singular; retry with ridge >= {suggested_ridge:e}")]
    SingularCovariance { suggested_ridge: f64 },

    #[error("insufficient controls: ratio matching needs {needed}, have {available}")]
    InsufficientControls { needed: usize, available: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("target {target:e} not reachable for delta <= {max_delta}")]
    Unreachable { target: f64, max_delta: f64 },

    #[error("{0} points exceed the exhaustive-labeling limit of 20")]
    TooLarge(usize),

    #[error("experiment degenerate: {failed} of {trials} trials failed")]
    ExperimentDegenerate { failed: usize, trials: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

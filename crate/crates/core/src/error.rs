use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("singular triangular factor: |diagonal[{index}]| = {value:e} is below tolerance {tolerance:e}")]
    SingularMatrix {
        index: usize,
        value: f64,
        tolerance: f64,
    },
    #[error("{what} failed to converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dim_mismatch(expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        expected: expected.into(),
        got: got.into(),
    }
}

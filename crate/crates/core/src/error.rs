use thiserror::Error;

/// Errors raised by the construction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("verification failed: {invariant}: {detail}")]
    Verification { invariant: String, detail: String },
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("missing data for diagram: {0}")]
    MissingData(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn verification(invariant: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Verification {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

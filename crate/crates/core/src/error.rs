use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty sample: frequency vector has zero total")]
    EmptySample,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid guidance direction: {0}")]
    InvalidDirection(String),

    #[error("numerically degenerate: {0}")]
    NumericDegenerate(String),

    #[error("reverse diffusion diverged at step t={step}")]
    Divergence { step: usize },

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    /// Whether the failure is transient and the request may be retried.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::OracleUnavailable(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

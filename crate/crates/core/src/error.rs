use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates a type invariant.
    #[error("rejected configuration: {0}")]
    Config(String),

    /// Input lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample rate mismatch: expected {expected} Sa/s, got {actual} Sa/s")]
    RateMismatch { expected: f64, actual: f64 },

    #[error("stream too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("delay calibration failed: {0}")]
    Calibration(String),

    #[error("discriminant training failed: {0}")]
    Training(String),

    #[error("invalid program: {0}")]
    Program(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}

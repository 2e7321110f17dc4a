use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZodiacError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("disconnected graph: {0}")]
    Disconnected(String),

    #[error("horizon too short: T = {t} must exceed n^3/p; minimal admissible T is {min_t}")]
    HorizonTooShort { t: usize, min_t: usize },

    #[error("parameter window violated: {0}")]
    ParameterWindow(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergence at agent {agent}, round {round}")]
    Divergence { agent: usize, round: usize },

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl From<std::io::Error> for ZodiacError {
    fn from(e: std::io::Error) -> Self {
        ZodiacError::Io(e.to_string())
    }
}

impl From<csv::Error> for ZodiacError {
    fn from(e: csv::Error) -> Self {
        ZodiacError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ZodiacError>;

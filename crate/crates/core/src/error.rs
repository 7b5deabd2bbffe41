use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    /// Element mean water height is not positive, so the positivity limiter cannot act.
    #[error("limiter precondition violated in element {element}: mean height {mean:e}")]
    LimiterPrecondition { element: usize, mean: f64 },

    #[error("nonlinear solver did not converge: {0}")]
    Nonconvergence(String),

    #[error("non-finite values detected: {0}")]
    NotFinite(String),

    #[error("solution blew up: {0}")]
    Blowup(String),

    #[error("configuration error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SweError {
    fn from(e: std::io::Error) -> Self {
        SweError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SweError>;

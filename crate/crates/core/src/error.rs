use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unsupported QAM alphabet size {0} (expected 4, 16 or 64)")]
    UnsupportedAlphabet(usize),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("pilot layout violation: {0}")]
    LayoutViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("undefined NMSE: estimated channel has zero energy")]
    UndefinedNmse,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

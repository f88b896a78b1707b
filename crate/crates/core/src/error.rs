use thiserror::Error;

#[derive(Debug, Error)]
pub enum TvlpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value produced in {stage}")]
    NonFinite { stage: &'static str },

    #[error("{kind} parse error at {location}: {message}")]
    Parse {
        kind: &'static str,
        location: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TvlpError>;

pub(crate) fn invalid(msg: impl Into<String>) -> TvlpError {
    TvlpError::InvalidParameter(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("action {action} out of range for ground set of size {n}")]
    InvalidAction { action: usize, n: usize },

    #[error("{what} needs exhaustive enumeration over size {size}, limit is {limit}")]
    Capability {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid ground set: {0}")]
    GroundSet(String),

    #[error("communication graph is not connected")]
    Disconnected,

    #[error("graph generation failed after {attempts} attempts")]
    Generation { attempts: usize },

    #[error("invalid weight matrix: {0}")]
    WeightMatrix(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {message}")]
    Parameter { field: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("cannot compare series: {0}")]
    Comparison(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            message: message.into(),
        }
    }
}

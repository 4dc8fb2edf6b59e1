use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error on {entity}: {message}")]
    Validation { entity: String, message: String },

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("numerical failure in LP engine: {0}")]
    Numerical(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("subproblem solver failure: {0}")]
    SolverFailure(String),

    #[error("compact formulation too large: {size} > {cap}")]
    SizeGuardExceeded { size: usize, cap: usize },

    #[error("time limit reached")]
    TimeLimit,

    #[error("config identifier error at position {position}: {message}")]
    Grammar { position: usize, message: String },

    #[error("malformed solve log: {0}")]
    MalformedLog(String),

    #[error("empty input")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

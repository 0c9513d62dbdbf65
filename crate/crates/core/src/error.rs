use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Each variant maps onto one CLI exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("insufficient accuracy: {0}")]
    Accuracy(String),
    #[error("degenerate data: {0}")]
    Data(String),
    #[error("conflicting rows: {0}")]
    Conflict(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// 2 for usage/config/domain problems, 3 for resource or cap failures,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Resource(_) | Error::CapExceeded(_) | Error::Overflow(_) => 3,
            _ => 1,
        }
    }
}

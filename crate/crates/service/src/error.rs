use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{stage}: {message}")]
    Validation { stage: &'static str, message: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        ServiceError::Validation { stage, message: message.into() }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ServiceError::NotFound(what.into())
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ServiceError::Internal(message.into())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Validation { .. } => 2,
            ServiceError::NotFound(_) => 3,
            ServiceError::Internal(_) => 4,
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;

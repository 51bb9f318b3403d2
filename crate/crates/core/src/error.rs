//! Crate-wide error type, categorized to match the CLI exit-code taxonomy.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration or invalid constructor input.
    #[error("config: {0}")]
    Config(String),

    /// Physically inconsistent request (RWA range, zero quantization axis, ...).
    #[error("physics: {0}")]
    Physics(String),

    /// An iterative procedure failed to converge.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn physics(msg: impl Into<String>) -> Self {
        Error::Physics(msg.into())
    }

    pub fn non_convergence(msg: impl Into<String>) -> Self {
        Error::NonConvergence(msg.into())
    }

    /// CLI exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Physics(_) => 3,
            Error::NonConvergence(_) => 4,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

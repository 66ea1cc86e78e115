use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit-code contract: validation problems
/// (bad input files, out-of-range config) exit with code 2, backend failures
/// (generator/reward/embedder calls that exhausted their retries) with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn backend(msg: impl Into<String>) -> Self {
        Error::Backend(msg.into())
    }

    /// Exit code for the CLI: 2 for validation/IO problems, 3 for backend failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Io(_) => 2,
            Error::Backend(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Failure categories of the command-line tool, each with its exit status.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] semigrav_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {0} item(s) did not pass")]
    Verification(usize),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Numerical(_) | AppError::Io(_) => 1,
            AppError::Config(_) | AppError::Usage(_) => 2,
            AppError::Verification(_) => 3,
        }
    }

    /// Core errors raised while building the scenario are configuration problems.
    pub fn from_setup(e: semigrav_core::Error) -> Self {
        match e {
            semigrav_core::Error::Config(m) | semigrav_core::Error::Degenerate(m) => {
                AppError::Config(m)
            }
            other => AppError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

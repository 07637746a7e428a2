use srd_core::SrdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    NonConvergence(String),

    #[error("{0}")]
    SizeGuard(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::SizeGuard(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<SrdError> for CliError {
    fn from(e: SrdError) -> Self {
        match e {
            SrdError::SizeGuard(_) => CliError::SizeGuard(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

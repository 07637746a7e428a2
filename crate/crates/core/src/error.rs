use thiserror::Error;

/// Errors raised by problem validation and the bound solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SrdError {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid distortion tensor: {0}")]
    InvalidTensor(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, SrdError>;

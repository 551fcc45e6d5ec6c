use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("non-finite argument: {0}")]
    NonFinite(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("wave speed undefined: lambda = {0} is not negative")]
    SpeedUndefined(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

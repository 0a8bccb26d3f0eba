//! Crate-wide error type.

/// Errors raised by model construction, filtering, sampling and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structural misuse: dimension mismatches, inconsistent specifications,
    /// inputs that violate a documented precondition.
    #[error("structural error: {0}")]
    Structural(String),

    /// A numerical operation failed (non-PD innovation covariance, singular
    /// system, non-finite intermediate).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data failed validation (bad dates, gaps, nonpositive levels).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the supplied arguments do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A configuration value violates a precondition (nonpositive bandwidth,
    /// empty grid, bad iteration counts, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An input value is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A factorization or solve failed numerically.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The propriety gate needs data (or an explicit n) it was not given.
    #[error("insufficient information: {0}")]
    InsufficientInformation(String),

    /// A sampler refused to run because the propriety gate did not return
    /// Proper and improper configurations were not explicitly allowed.
    #[error("propriety gate refused to run the chain: {0}")]
    GateRefusal(String),

    /// An integrand diverges at an endpoint of the requested domain.
    #[error("endpoint divergence: {0}")]
    EndpointDivergent(String),

    /// The requested problem size is outside what the operation supports.
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// Failure while reading or parsing an external file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

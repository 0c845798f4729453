use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),

    #[error("invalid carrier: {0}")]
    InvalidCarrier(String),

    #[error("element violates carrier invariant: {0}")]
    InvalidElement(String),

    #[error("J is not skew-symmetric (max |J + Jᵀ| = {0:e})")]
    NotSkew(f64),

    #[error("element is not homogeneous ({terms} spectral terms)")]
    NotHomogeneous { terms: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functional: {0}")]
    Functional(String),

    #[error("csv: {0}")]
    Csv(String),
}

use thiserror::Error;

use crate::lattice::Basis;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch { expected: Basis, found: Basis },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("wrap-around guard violated: {0}")]
    WrapAround(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step-size guard violated: dt = {dt} exceeds {limit}")]
    StepSize { dt: f64, limit: f64 },
    #[error("grid too large for dense oracle: {sites} sites (limit 4096)")]
    OversizeGrid { sites: usize },
    #[error("order j = {0} exceeds the cost guard (12)")]
    OrderTooLarge(usize),
    #[error("power iteration did not converge after {iterations} iterations: estimate {estimate}, last relative change {gap}")]
    NotConverged {
        estimate: f64,
        iterations: usize,
        gap: f64,
    },
    #[error("quadrature error estimate {estimate} exceeds tolerance {tolerance}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("truncation budget unreachable: {0}")]
    Truncation(String),
    #[error("filter too short: {0}")]
    FilterTooShort(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed potential file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

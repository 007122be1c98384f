//! Crate-wide error type.

use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("numerical failure: {what} (estimated error {achieved:e}, requested {requested:e})")]
    Numerical {
        what: String,
        achieved: f64,
        requested: f64,
    },
    /// An iterative method stopped at its cap; `best` is the last iterate.
    #[error("iteration limit {iterations} reached: residual {residual:e}")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

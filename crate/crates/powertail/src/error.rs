//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by evaluation, fitting, sampling and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A result is not representable (overflow/underflow) or a required
    /// quantity vanished numerically.
    #[error("range error: {0}")]
    Range(String),

    /// Quadrature did not reach the requested tolerance within the node
    /// budget. Carries the best estimate achieved.
    #[error(
        "accuracy error: estimate {estimate:e} with achieved tolerance {achieved:e} \
         (requested {requested:e})"
    )]
    Accuracy {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    /// Settings are internally inconsistent or unusable for the request.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data is missing, malformed or insufficient.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

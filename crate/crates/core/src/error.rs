use thiserror::Error;

use crate::spaces::Point;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point does not belong to the space: {0}")]
    SpaceMismatch(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("operation not supported on this space: {0}")]
    Unsupported(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("barycenter iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence {
        best: Box<Point>,
        iterations: usize,
        residual: f64,
    },

    #[error("map is not 1-Lipschitz: samples {u} and {v} have ratio {ratio}")]
    NotLipschitz { u: usize, v: usize, ratio: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("no dual certificate: {0}")]
    CertificateNotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gamma pole: argument {arg} is a non-positive integer")]
    Pole { arg: f64 },

    #[error("incompatible exponents: 1/p + 1/r - lambda/n - 2 = {defect:e}")]
    Incompatible { defect: f64 },

    #[error("negative sample {value} at r = {r}")]
    NegativeSample { r: f64, value: f64 },

    #[error("seam mismatch at R = {radius}: grid value {grid}, tail value {tail}")]
    SeamMismatch { radius: f64, grid: f64, tail: f64 },

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("refinement exhausted: last two estimates {previous} and {last}")]
    RefinementExhausted { previous: f64, last: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular point: {0}")]
    Singular(String),

    #[error("profile must be strictly positive: {0}")]
    NotPositive(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

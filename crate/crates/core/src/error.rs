use thiserror::Error;

/// Errors raised by the grid, norm, solver and harness routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("invalid exponent field: {0}")]
    InvalidExponent(String),

    #[error("empty sample set: {0}")]
    EmptySampleSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no Luxemburg bracket after {iterations} steps (last bracket [{lo}, {hi}])")]
    BracketNotFound { lo: f64, hi: f64, iterations: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("region escapes the domain: {0}")]
    OutsideDomain(String),

    #[error("non-finite iterate at iteration {0}")]
    NonFinite(usize),

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

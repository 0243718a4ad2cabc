use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid interval: lo = {lo}, hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("set is empty")]
    EmptySet,

    #[error("set has no interior")]
    NoInterior,

    #[error("set is unbounded; clip it to a box first")]
    Unbounded,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stream exhausted after {consumed} cells")]
    StreamExhausted { consumed: usize },

    #[error("value {0} is not in the range of the friction function")]
    NotInRange(f64),

    #[error("design matrix not well-conditioned: smallest eigenvalue {min_eigenvalue:e}")]
    IllConditioned { min_eigenvalue: f64 },

    #[error("not enough observations: {required} required, {available} available")]
    InsufficientData { required: usize, available: usize },

    #[error(
        "truncation mass too small ({hits} of {probes} probe draws inside); use a wider interval"
    )]
    TruncationMassTooSmall { hits: usize, probes: usize },

    #[error("unsupported cell representation: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

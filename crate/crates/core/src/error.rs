use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("scale ratio must be positive and finite, got {0}")]
    NonPositiveRatio(f64),

    #[error("sample must contain at least one observation")]
    EmptySample,

    #[error("observation {index} is not finite ({value})")]
    NonFiniteObservation { index: usize, value: f64 },

    #[error("sample size must be at least 1")]
    InvalidSampleSize,

    #[error("penalty constant must be a finite nonnegative number, got {0}")]
    InvalidPenalty(f64),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown density id {0} (expected 1..=6)")]
    InvalidDensityId(u8),

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("bandwidth {0} is not a member of the grid")]
    BandwidthNotInGrid(f64),

    #[error("distance cache has no entry for bandwidth pair ({0}, {1})")]
    MissingCacheEntry(usize, usize),

    #[error("penalty path needs at least 2 points, got {0}")]
    PathTooShort(usize),

    #[error(
        "quadrature did not converge: estimated error {achieved:e} exceeds requested {requested:e}"
    )]
    Quadrature { achieved: f64, requested: f64 },

    #[error("no records at a = {0}")]
    NoRecords(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(h))
    }
}

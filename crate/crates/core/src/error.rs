use thiserror::Error;

use crate::params::ValidationReport;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("Poisson mean must be finite and nonnegative, got {0}")]
    InvalidMean(f64),

    #[error("file rank {rank} outside 1..={library_size}")]
    RankOutOfRange { rank: usize, library_size: usize },

    #[error("invalid popularity model: {0}")]
    InvalidPopularity(String),

    #[error("windowed quantities need a positive update interval; use the instantaneous path for delta = 0")]
    ZeroInterval,

    #[error("download delay must be positive, got {0}")]
    NonPositiveDelay(f64),

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error("parameter validation failed: {0}")]
    Validation(ValidationReport),
}

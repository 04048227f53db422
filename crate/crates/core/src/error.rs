use thiserror::Error;

/// Errors produced by state constructors, channels and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state failed its normalization invariant by more than the repair
    /// threshold (1e-6) and was rejected.
    #[error("state normalization off by {0:.3e}, beyond repair threshold")]
    BadNormalization(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A squeezing metric is undefined for this state (e.g. vanishing mean
    /// spin for xi_S, or a vacuum denominator for xi_D).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("numerical underflow: {0}")]
    Underflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

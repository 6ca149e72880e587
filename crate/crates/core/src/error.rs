use thiserror::Error;

/// Errors produced by the fitting, tuning and ingestion routines.
#[derive(Debug, Error)]
pub enum SplitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),

    #[error("labels contain a single class; both classes are required for fitting")]
    SingleClass,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("no usable signal: every predictor is orthogonal to the labels")]
    NoSignal,

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SplitError>;

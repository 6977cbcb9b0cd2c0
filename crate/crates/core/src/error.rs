use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("threshold too small for asymptotic regime: {0}")]
    ThresholdTooSmall(String),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("circulant embedding failed: {0}")]
    Embedding(String),

    #[error("minimization failed: {0}")]
    Minimization(String),

    #[error("fixed-point iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("constant unavailable: {0}")]
    ConstantUnavailable(String),

    #[error("query does not match path: {0}")]
    Mismatch(String),

    #[error("cache write failed for {path}: {source}")]
    CacheWrite {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures raised by the path samplers.
    pub fn is_sampler_failure(&self) -> bool {
        matches!(self, Error::Factorization(_) | Error::Embedding(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

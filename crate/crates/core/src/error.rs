use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("squeezing parameter {0} exceeds the overflow guard of 25 nats")]
    Overflow(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        /// Best feasible iterate reached before giving up.
        best_alpha: Vec<f64>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

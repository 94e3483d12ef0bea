use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("budget constraint violated by {violation:.3e} at (i={i}, j={j})")]
    Budget { violation: f64, i: usize, j: usize },

    #[error("inconsistent query state: no embedding agrees with the observed outcomes")]
    Inconsistent,

    #[error("size guard exceeded: {0}")]
    TooLarge(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

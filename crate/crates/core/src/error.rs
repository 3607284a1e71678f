use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not {period}-periodic: residual {residual:e} exceeds {tolerance:e}")]
    NotPeriodic {
        period: u32,
        residual: f64,
        tolerance: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("frequency {frequency} is not resolved by a grid of {grid} nodes (need at least {required})")]
    UnresolvedFrequency {
        frequency: f64,
        grid: usize,
        required: usize,
    },

    #[error("only {usable} usable points after noise-floor censoring (need {required})")]
    InsufficientData { usable: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field lives on a different grid than the geometry")]
    GridMismatch,

    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("time {0} is not a stored sample of the history")]
    NotASample(f64),

    #[error("initial conformal factor is not pole-regular: slope {slope:.3e} at the {pole} pole exceeds {tolerance:.3e}")]
    PoleIrregular {
        pole: &'static str,
        slope: f64,
        tolerance: f64,
    },

    #[error("surface flow blew up (non-finite conformal factor) at t = {time}")]
    BlowUp { time: f64 },

    #[error("positivity lost at node {node}, t = {time}: u = {value:e}")]
    PositivityLoss { node: usize, time: f64, value: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("region contains no samples")]
    EmptyRegion,

    #[error("terminal data has mass {mass}, expected 1 (strict normalization)")]
    NotNormalized { mass: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

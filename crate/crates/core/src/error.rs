use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dipole transition J = {upper} -> J = {lower}")]
    UnsupportedTransition { upper: String, lower: String },

    #[error("degenerate steady state (singular value ratio {ratio:.3e})")]
    DegenerateSteadyState { ratio: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("non-positive value {value:e} at tau = {tau:e} s inside the fit window")]
    NonPositive { tau: f64, value: f64 },

    #[error("zero denominator integral at tau = {tau:e} s")]
    ZeroDenominator { tau: f64 },

    #[error("event stream not strictly increasing at index {index}")]
    UnsortedStream { index: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

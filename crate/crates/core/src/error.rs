use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A closed-form constant left the domain where its formula is defined.
    #[error("constants out of range: {0}")]
    ConstantsOutOfRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown regime tag `{tag}`; valid tags: {}", valid.join(", "))]
    UnknownRegime { tag: String, valid: Vec<String> },

    #[error("weight is not >= 1 (value {value}) at state {state}")]
    InvalidWeight { value: f64, state: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("time step {dt} exceeds the integrator stability limit {limit}")]
    StabilityLimit { dt: f64, limit: f64 },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{fraction:.4} of the ensemble mass lies outside the binning box")]
    MassOutsideBox { fraction: f64 },

    #[error("no certified constants: {0}")]
    NoCertifiedConstants(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

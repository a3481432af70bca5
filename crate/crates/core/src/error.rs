use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("characteristic roots nearly coincide at r = {r:e}; use the ODE oracle")]
    NearDegenerate { r: f64 },

    #[error("step {step:e} too large for stiffness bound (limit {limit:e})")]
    UnstableStep { step: f64, limit: f64 },

    #[error("tail not negligible at r_max = {r_max:e} (estimate {tail:e})")]
    Truncation { r_max: f64, tail: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("refinement check failed: {0}")]
    Refinement(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

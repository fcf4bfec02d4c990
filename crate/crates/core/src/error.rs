use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time must be non-negative, got t = {0:e} s")]
    NegativeTime(f64),

    #[error("finite-difference step {step:e} does not perturb parameter value {value:e}")]
    StepUnderflow { step: f64, value: f64 },

    #[error("unphysical covariance matrix: det = {det}")]
    Unphysical { det: f64 },

    #[error(
        "M = σ⊗σ − Ω⊗Ω is singular (det σ = {det_sigma}); \
         pure states must go through the pure-limit path"
    )]
    SingularM { det_sigma: f64 },

    #[error("singular QFIM (det = {det:e}): the parameters are not independent")]
    SingularQfim { det: f64 },

    #[error("QFIM diagonal element `{0}` is not positive")]
    NonPositiveDiagonal(&'static str),

    #[error("closed-form denominator α vanishes")]
    DegenerateAlpha,

    #[error("quadrature unresolved: refinement changed the result by {change:e} (tolerance {tolerance:e})")]
    Unresolved { change: f64, tolerance: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

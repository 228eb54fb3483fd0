use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdmError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("degenerate parameters: {0}")]
    DegenerateParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("result is not real: max imaginary part {0:e}")]
    NonReal(f64),

    #[error("binomial weights overflow for m = {0} atoms (limit 64)")]
    OverflowGuard(usize),

    #[error("detection outcome has probability {0:e}, conditional state undefined")]
    DegenerateOutcome(f64),

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("phase distribution dips to {0:e}, below the truncation tolerance")]
    NegativePhaseDensity(f64),

    #[error("not converged: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, SdmError>;

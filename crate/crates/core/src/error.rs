use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every solver and verifier in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("quadrature on [{lower}, {upper}] did not reach tolerance: value {value:e}, error estimate {error:e} after {intervals} intervals")]
    Quadrature {
        lower: f64,
        upper: f64,
        value: f64,
        error: f64,
        intervals: usize,
    },

    #[error("solution blew up at step {step} (t = {t}), grid index {index} (x = {x}): value {value}")]
    BlowUp {
        step: usize,
        index: usize,
        t: f64,
        x: f64,
        value: f64,
    },

    #[error("explicit drift step unstable: dt * L = {product} exceeds {limit}")]
    Unstable { product: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("optimization stalled: {reason}")]
    Stalled {
        reason: String,
        best: Box<crate::rate::RateSolution>,
    },

    #[error("unknown coefficient set `{0}`")]
    UnknownCoefficients(String),

    #[error("unknown control `{0}`")]
    UnknownControl(String),

    #[error("diffusion not invertible: |sigma| = {sigma:e} below {sigma_min:e} at step {step}, index {index}")]
    NotInvertible {
        sigma: f64,
        sigma_min: f64,
        step: usize,
        index: usize,
    },

    #[error("target trajectory starts {distance:e} away from the initial profile")]
    Incompatible { distance: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

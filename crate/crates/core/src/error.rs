use thiserror::Error;

/// Errors produced by the laboratory.
///
/// `InvalidParameter` and `Cfl` are rejected inputs; the CLI maps them to a
/// usage error (exit 2). Everything else is a runtime failure (exit 1).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("outside the blow-up range: gamma = {gamma}")]
    OutsideBlowupRange { gamma: f64 },

    #[error("CFL condition violated: factor {factor} > 1")]
    Cfl { factor: f64 },

    #[error("support leaked beyond the light cone: relative margin {margin:e} > {tolerance:e}")]
    SupportLeak { margin: f64, tolerance: f64 },

    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudget { steps: usize, t: f64 },

    #[error("audit failure: {0}")]
    AuditFailure(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Cfl { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

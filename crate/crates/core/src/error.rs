use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square or not symmetric: {0}")]
    NotSymmetric(String),

    #[error("form is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("form is too ill-conditioned (condition estimate {estimate:e} > {limit:e})")]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("point outside the domain: {0}")]
    OutsideDomain(String),

    #[error("state is off the screen: |h(q) - 1| = {residual:e}")]
    OffScreen { residual: f64 },

    #[error("velocity is not tangent to the screen: |Dh(q)[p]| = {residual:e}")]
    NotTangent { residual: f64 },

    #[error("reaction direction nearly tangent to the screen: |Dh(q)[d(q)]| = {value:e} at q = {q:?}")]
    Transversality { value: f64, q: Vec<f64> },

    #[error("integration left the domain at t = {t}: {reason}")]
    DomainExit { t: f64, reason: String },

    #[error("step limit of {max_steps} reached at t = {t}")]
    StepLimit { t: f64, max_steps: usize },

    #[error("step size underflow (h = {h:e}) at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter ranges do not overlap: [{a0}, {a1}] vs [{b0}, {b1}]")]
    NoOverlap { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("initial states differ by {gap:e}")]
    InitialMismatch { gap: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Attach an integration time to a domain-type failure.
    pub(crate) fn at_time(self, t: f64) -> Error {
        match self {
            Error::OutsideDomain(reason) => Error::DomainExit { t, reason },
            Error::OffScreen { residual } => Error::DomainExit {
                t,
                reason: format!("screen function lost positivity (residual {residual:e})"),
            },
            other => other,
        }
    }
}

use thiserror::Error;

use crate::chain::StepIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid embedding: support {inner} is not contained in {outer}")]
    InvalidEmbedding { inner: String, outer: String },

    #[error("invalid generator: ‖S + S†‖ = {defect:e} exceeds tolerance")]
    InvalidGenerator { defect: f64 },

    #[error("hermiticity lost after conjugation: deviation {deviation:e}")]
    HermiticityLost { deviation: f64 },

    #[error("sweep complete: no successor after the final step")]
    SweepComplete,

    #[error("unsupported operator: {0}")]
    Unsupported(String),

    #[error("internal order violation: {0}")]
    InternalOrder(String),

    #[error("gap assumption violated: {0}")]
    GapAssumptionViolated(String),

    #[error("local gap {gap} below threshold {gap_min}")]
    GapTooSmall { gap: f64, gap_min: f64 },

    #[error("series not converged after order {order}: last term norm {last_term:e}")]
    SeriesNotConverged { order: usize, last_term: f64 },

    #[error("off-diagonal residual {residual:e} exceeds tolerance {tol:e}")]
    OffDiagonalResidual { residual: f64, tol: f64 },

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("dimension {dim} exceeds dense guard {guard}")]
    TooLarge { dim: usize, guard: usize },

    #[error("regrouping error: {0}")]
    Regrouping(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("step ({}, {}) failed: {source}", step.k, step.q)]
    Step {
        step: StepIndex,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::InvalidModel(_)
            | Error::Regrouping(_)
            | Error::UnsupportedFormat(_) => 2,
            Error::SeriesNotConverged { .. }
            | Error::OffDiagonalResidual { .. }
            | Error::CertificationFailed(_) => 3,
            Error::GapAssumptionViolated(_) | Error::GapTooSmall { .. } => 4,
            Error::Step { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid-model",
            Error::InvalidEmbedding { .. } => "invalid-embedding",
            Error::InvalidGenerator { .. } => "invalid-generator",
            Error::HermiticityLost { .. } => "hermiticity-lost",
            Error::SweepComplete => "sweep-complete",
            Error::Unsupported(_) => "unsupported",
            Error::InternalOrder(_) => "internal-order-violation",
            Error::GapAssumptionViolated(_) => "gap-assumption-violated",
            Error::GapTooSmall { .. } => "gap-too-small",
            Error::SeriesNotConverged { .. } => "series-not-converged",
            Error::OffDiagonalResidual { .. } => "series-not-converged",
            Error::CertificationFailed(_) => "certification-failed",
            Error::TooLarge { .. } => "too-large-for-assembly",
            Error::Regrouping(_) => "regrouping-error",
            Error::Numeric(_) => "numeric-failure",
            Error::Parse(_) => "parse-error",
            Error::Validation(_) => "validation-error",
            Error::UnsupportedFormat(_) => "unsupported-format",
            Error::Io(_) => "io-error",
            Error::Step { source, .. } => source.kind(),
        }
    }

    pub fn at_step(self, step: StepIndex) -> Error {
        match self {
            Error::Step { .. } => self,
            other => Error::Step {
                step,
                source: Box::new(other),
            },
        }
    }

    /// The step this error is attached to, if any.
    pub fn step(&self) -> Option<StepIndex> {
        match self {
            Error::Step { step, .. } => Some(*step),
            _ => None,
        }
    }
}

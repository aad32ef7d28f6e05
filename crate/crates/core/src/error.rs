use thiserror::Error;

/// Broad failure category, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid arguments or configuration.
    Usage,
    /// Malformed or inconsistent input data.
    Data,
    /// A numerical procedure failed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("normalized position {0} lies outside [0, 1]")]
    PositionOutOfRange(f64),

    #[error("grid point {x} m lies outside the vessel [0, {length}] m")]
    GridOutsideVessel { x: f64, length: f64 },

    #[error("no periodic state after {cycles} cycles (residual {residual:.3e})")]
    NonConvergence { cycles: usize, residual: f64 },

    #[error("numerical blow-up in {vessel} at t = {time:.6} s")]
    NumericalBlowup { vessel: String, time: f64 },

    #[error("time step underflow: {steps_per_cycle} steps per cycle required")]
    InstabilityAtSeverity { steps_per_cycle: usize },

    #[error("junction solve failed after {iterations} iterations (residual {residual:.3e})")]
    JunctionSolve { iterations: usize, residual: f64 },

    #[error("{samples} samples cannot determine {coefficients} Fourier coefficients")]
    DegenerateSampling { samples: usize, coefficients: usize },

    #[error("feature `{feature}` has zero variance over the training rows")]
    ZeroVariance { feature: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {class} has {count} samples, at least {required} required")]
    InsufficientClass {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("loss became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error(
        "SMO did not converge in {iterations} iterations (max KKT violation {max_violation:.3e})"
    )]
    SvmNonConvergence {
        iterations: usize,
        max_violation: f64,
    },

    #[error(
        "simulation failure rate {rate:.3} exceeds limit {limit:.3} after {attempts} attempts"
    )]
    FailureRate {
        rate: f64,
        limit: f64,
        attempts: usize,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. }
            | Error::PositionOutOfRange(_)
            | Error::GridOutsideVessel { .. } => ErrorKind::Usage,
            Error::ZeroVariance { .. }
            | Error::DimensionMismatch { .. }
            | Error::InsufficientClass { .. }
            | Error::Data(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorKind::Data,
            Error::NonConvergence { .. }
            | Error::NumericalBlowup { .. }
            | Error::InstabilityAtSeverity { .. }
            | Error::JunctionSolve { .. }
            | Error::DegenerateSampling { .. }
            | Error::Divergence { .. }
            | Error::SvmNonConvergence { .. }
            | Error::FailureRate { .. } => ErrorKind::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

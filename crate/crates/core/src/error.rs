use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("blow-up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error("boundary contamination at t = {time}: edge/sup ratio {ratio:e} exceeds {limit:e}")]
    BoundaryContamination { time: f64, ratio: f64, limit: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("tolerance {requested:e} unreachable at maximum grid size (best estimate {achieved:e})")]
    ToleranceUnreachable { achieved: f64, requested: f64 },

    #[error("interpolation: {0}")]
    Interpolation(String),

    #[error("step size underflow at t = {time} (dt = {dt:e})")]
    StepUnderflow { time: f64, dt: f64 },

    #[error("step budget of {steps} exhausted at t = {time}")]
    StepBudget { time: f64, steps: u64 },

    #[error("fit: {0}")]
    Fit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Other,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid(_) | Error::Json(_) | Error::Unsupported(_) => ErrorKind::Validation,
            Error::BlowUp { .. }
            | Error::BoundaryContamination { .. }
            | Error::Quadrature { .. }
            | Error::ToleranceUnreachable { .. }
            | Error::Interpolation(_)
            | Error::StepUnderflow { .. }
            | Error::StepBudget { .. }
            | Error::Fit(_) => ErrorKind::Numerical,
            Error::Checksum(_) | Error::Io(_) => ErrorKind::Other,
        }
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "invalid",
            Error::BlowUp { .. } => "blow_up",
            Error::BoundaryContamination { .. } => "boundary_contamination",
            Error::Quadrature { .. } => "quadrature",
            Error::ToleranceUnreachable { .. } => "tolerance_unreachable",
            Error::Interpolation(_) => "interpolation",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::StepBudget { .. } => "step_budget",
            Error::Fit(_) => "fit",
            Error::Unsupported(_) => "unsupported",
            Error::Checksum(_) => "checksum",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

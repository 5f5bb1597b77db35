use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// An enumeration would exceed its configured size cap.
    #[error("analysis cap exceeded: {0}")]
    CapExceeded(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A runtime monitor tripped; a smaller step usually fixes it.
    #[error("integrator instability at t = {t}: {detail} (try a smaller step)")]
    IntegratorInstability { t: f64, detail: String },

    #[error("non-finite state at t = {t}")]
    Divergence { t: f64 },

    #[error("gain evaluation failed at t = {t}: {detail}")]
    GainEvaluation { t: f64, detail: String },

    #[error("trajectory too short: tail has {tail} samples, need at least {required}")]
    TrajectoryTooShort { tail: usize, required: usize },
}

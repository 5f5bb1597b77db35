//! Analysis and simulation of opinion dynamics over signed, possibly
//! time-varying interaction graphs.
//!
//! Agent `j` listens to agent `k` when `a_jk != 0`; positive weights are
//! cooperative and negative ones antagonistic. Indices are 0-based.

pub mod classification;
pub mod dynamics;
pub mod error;
pub mod signed_graph;
pub mod time_varying;
pub mod topology;

pub use classification::{
    classify, limit_functional, reconcile, Classification, ClassifierConfig, LimitFunctional,
    Outcome, OutcomeKind, Reconciliation, Verdict,
};
pub use dynamics::{
    integrate, integrate_gain_flow, integrate_nonlinear_additive, AdditiveVariant,
    IntegratorConfig, Trajectory,
};
pub use error::{Error, Result};
pub use signed_graph::{laplacian, Schedule, ScheduleFile, Segment, SignedMatrix};
pub use topology::static_predict;

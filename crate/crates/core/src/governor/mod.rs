//! Reference governor built on a discrete LTI model. The admissible set is
//! computed offline; the online part is a scalar command update.

pub mod lp;
pub mod lti;
pub mod mas;
pub mod rg;

pub use lp::{lp_max, LpError, LpSolution};
pub use lti::{default_linear_model, discretize_zoh, LtiModel};
pub use mas::{build_mas, AdmissibleSet};
pub use rg::{rg_update, GovernorState, RgStep};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GovernorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("discrete model is not Schur stable (spectral radius {0})")]
    NotSchur(f64),
    #[error("(A, C) is not observable (rank {rank} < {n})")]
    NotObservable { rank: usize, n: usize },
    #[error("invalid bounds: need y_lower < 0 < y_upper, got [{lower}, {upper}]")]
    Bounds { lower: f64, upper: f64 },
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("sample time must be positive, got {0}")]
    SampleTime(f64),
    #[error("model is already discrete")]
    AlreadyDiscrete,
    #[error("model is continuous; discretize it first")]
    NotDiscrete,
    #[error("admissible set not finitely determined within {cap} steps; try a larger epsilon")]
    NotDetermined { cap: usize },
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("admissible set document: {0}")]
    Format(String),
}

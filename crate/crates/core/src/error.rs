use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies on the switching manifold x_1 = 0")]
    OnSwitchingManifold,

    #[error("orbit touches the switching manifold at step {step}; the map is not smooth there")]
    NonSmooth { step: usize },

    #[error("orbit diverged at step {step}")]
    Diverged { step: usize },

    #[error("(a_L, a_R) = ({a_l}, {a_r}) is not in S_{k}")]
    NotInRegion { k: usize, a_l: f64, a_r: f64 },

    #[error("no admissible delta found after {halvings} halvings")]
    NoDeltaFound { halvings: u32 },

    #[error("sample set is empty")]
    EmptySample,

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("inconclusive: {skipped} of {total} samples skipped near the switching manifold")]
    Inconclusive { skipped: usize, total: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

use thiserror::Error;

/// Failures raised by geometry evaluation, flows and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate immersion at node {node}: {detail}")]
    DegenerateImmersion { node: usize, detail: String },

    #[error("graph condition violated at node {node}: |eigenvalue| = {eigenvalue:.6e} exceeds cap {cap}")]
    GraphConditionViolated { node: usize, eigenvalue: f64, cap: f64 },

    #[error("Lagrangian angle branch inconsistent between nodes {from} and {to}")]
    BranchInconsistency { from: usize, to: usize },

    #[error("field is not normal at node {node}: tangential component {tangential:.3e}")]
    NotNormal { node: usize, tangential: f64 },

    #[error("Lagrangian angle winds around a period (windings {windings:?})")]
    NonzeroWinding { windings: Vec<i64> },

    #[error("Lagrangian angle increments across the period lattice are not constant (mismatch {mismatch:.3e})")]
    AperiodicAngle { mismatch: f64 },

    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid points must be a power of two >= 16, got {0}")]
    BadGrid(usize),

    #[error(
        "antiderivative of non-mean-free field: component {component} has mean magnitude {mean:.3e}"
    )]
    NonIntegrable { component: usize, mean: f64 },

    #[error("flow index {0} outside supported range {1}..={2}")]
    FlowIndexOutOfRange(u32, u32, u32),

    #[error("hamiltonian index {index} outside supported range 1..={max}")]
    HamiltonianIndexOutOfRange { index: u32, max: u32 },

    #[error("solution lost regularity (NaN or Inf) at t = {time:.6}")]
    BlowUp { time: f64 },

    #[error("frame lost unitarity: deviation {deviation:.3e} exceeds {limit:.1e}")]
    UnitarityLoss { deviation: f64, limit: f64 },

    #[error("direction field lost unit norm: deviation {deviation:.3e} exceeds {limit:.1e}")]
    UnitNormLoss { deviation: f64, limit: f64 },

    #[error(
        "coordinate singularity: theta = {theta:.6} at grid index {index} is within {margin} of {{0, pi/2, pi}}"
    )]
    CoordinateSingularity { index: usize, theta: f64, margin: f64 },

    #[error("frame inconsistent with state: deviation {deviation:.3e}")]
    InconsistentFrame { deviation: f64 },

    #[error("matrix logarithm undefined: eigenvalue at or near -1")]
    LogBranchCut,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed snapshot file: {0}")]
    BadSnapshot(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Errors raised by the operator library.
///
/// Reporting operations (validation, bound checks) never return these for a
/// failed inequality; they put the outcome in their report instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Hilbert space dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ground space is {degeneracy}-fold degenerate; a unique ground state is required")]
    DegenerateGround { degeneracy: usize },

    #[error("state is not normalized (norm {norm:.3e})")]
    NotNormalized { norm: f64 },

    #[error("term {term} has a trivial kernel and cannot be frustration-free")]
    TrivialKernel { term: usize },

    #[error("operator does not fix the ground state (residual {residual:.3e})")]
    GroundInvariance { residual: f64 },

    #[error("operator leaks the orthogonal complement into the ground space (residual {residual:.3e})")]
    PerpLeak { residual: f64 },

    #[error("initial state has zero overlap with the ground state")]
    ZeroOverlap,

    #[error(
        "overlap failed to increase at iteration {iteration} ({before:.6} -> {after:.6}) \
         while the amplification preconditions hold"
    )]
    CertificateViolation {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

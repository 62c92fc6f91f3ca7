use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field length {found} does not match grid ({expected} entries expected)")]
    LengthMismatch { expected: usize, found: usize },

    #[error("tensor is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("voxel data, line {line}: {message}")]
    VoxelFormat { line: usize, message: String },

    #[error("phase id {0} has no entry in the phase table")]
    UnknownPhase(u32),

    #[error("voxel data holds {found} phase ids, grid needs {expected}")]
    NodeCountMismatch { expected: usize, found: usize },

    #[error("field carries no phase labels")]
    NoPhaseLabels,

    #[error("inverse transform left an imaginary part of relative size {ratio:.3e}")]
    NonNegligibleImaginaryPart { ratio: f64 },

    #[error("dense assembly of {size} unknowns exceeds the limit of {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },

    #[error("initial perturbation leaves the compatible subspace (relative defect {ratio:.3e})")]
    InitialVectorNotInE { ratio: f64 },

    #[error("breakdown at iteration {iteration}: curvature {curvature:.3e} is not positive")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("not converged after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

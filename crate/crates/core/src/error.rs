use thiserror::Error;

/// Errors raised by set constructors and set operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("polytope is unbounded; only bounded sets are supported")]
    UnboundedPolytope,
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("operation requires a set with nonempty interior")]
    EmptyInterior,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("points lie in a lower-dimensional affine set")]
    DegenerateInput,
    #[error("quadratic term is not positive semidefinite")]
    NotPsd,
    #[error("shape matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("generator matrix is singular")]
    SingularGenerator,
    #[error("map must have full row rank")]
    RankDeficient,
    #[error("support vector is undefined for the zero direction")]
    ZeroDirection,
    #[error("dimension {dim} exceeds the cap of {cap}; use a sampling-based estimate instead")]
    DimensionCap { dim: usize, cap: usize },
    #[error("latent dimension {latent} exceeds the exact-conversion cap of {cap}")]
    LatentDimCap { latent: usize, cap: usize },
    #[error("invalid dimension list: {0}")]
    BadDims(String),
    #[error("operation requires a set in R^{expected}, got R^{found}")]
    BadDimension { expected: usize, found: usize },
    #[error("unsupported subtrahend: {0}")]
    UnsupportedSubtrahend(String),
    #[error("unsupported operand pair: {0}")]
    UnsupportedOperandPair(String),
    #[error("solver reached the iteration limit")]
    IterationLimit,
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("dynamics matrix A is singular")]
    SingularA,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {found} is too small (need at least {min})")]
    DimensionTooSmall { min: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not a unit direction (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("directions are (nearly) antipodal: <a,b> = {dot}")]
    AntipodalInput { dot: f64 },

    #[error("directions are not orthogonal: <a,b> = {dot}")]
    NotOrthogonal { dot: f64 },

    #[error("linear map is singular")]
    SingularMap,

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point set does not span the ambient space")]
    DegeneratePoints,

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("shrink factor {factor} below 1/2: facet direction set is too coarse")]
    ShrinkBelowHalf { factor: f64 },

    #[error("least-squares system is rank deficient")]
    RankDeficient,

    #[error("fitted quadratic form is not positive definite")]
    NotPositiveDefinite,

    #[error("no linear map carries one section onto the other (best error {best_error})")]
    TransportFailed { best_error: f64 },

    #[error("body spec parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

use thiserror::Error;

/// Everything that can go wrong inside the formalism.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("factor index {index} out of range for {factors} factors")]
    InvalidFactor { index: usize, factors: usize },
    #[error("operator is not Hermitian within {tol:e}")]
    NotHermitian { tol: f64 },
    #[error("{what} is not normalized (|norm^2 - 1| = {deviation:e})")]
    NotNormalized { what: &'static str, deviation: f64 },
    #[error("invalid time ordering: require t1 <= t <= t2")]
    TimeOrder,
    #[error("two-state operator vanishes")]
    VanishingTwoState,
    #[error("pre- and post-selected conditions are orthogonal (overlap {overlap:e})")]
    OrthogonalConditions { overlap: f64 },
    #[error("free environment conditions are orthogonal (|N| = {norm:e})")]
    OrthogonalEnvironment { norm: f64 },
    #[error("forbidden intermediate measurement: all amplitudes vanish")]
    ForbiddenMeasurement,
    #[error("invalid projector set: {0}")]
    InvalidProjectors(&'static str),
    #[error("basis is not complete and orthonormal within {tol:e}")]
    InvalidBasis { tol: f64 },
    #[error("zero trace or norm")]
    ZeroTrace,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },
    #[error("interaction does not commute with the free Hamiltonian (deviation {deviation:e})")]
    NonCommuting { deviation: f64 },
    #[error("weak-coupling validity violated: {quantity} = {value} (limit {limit})")]
    WeakCouplingViolated { quantity: &'static str, value: f64, limit: f64 },
    #[error("interaction kind mismatch: expected {0}")]
    KindMismatch(&'static str),
    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("too few integration steps ({0}, minimum 10)")]
    TooFewSteps(usize),
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("density matrix has trace {trace} (expected 1)")]
    BadTrace { trace: C64 },

    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("matrix or vector contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector of length {0} is not the vectorization of a square operator")]
    NotVectorized(usize),

    #[error("state label {label} out of range for dimension {dim}")]
    LabelOutOfRange { label: usize, dim: usize },

    #[error("projector index set must contain (0, 0)")]
    MissingReferencePopulation,

    #[error("duplicate index pair ({0}, {1}) in projector index set")]
    DuplicateIndex(usize, usize),

    #[error("resolvent at z = {z} is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularResolvent { z: C64, condition: f64 },

    #[error("resolvent solve at z = {z} left relative residual {residual:e}")]
    ResolventResidual { z: C64, residual: f64 },

    #[error("Laplace point z = {0} must have positive real part")]
    LeftHalfPlane(C64),

    #[error("charge operator {index} is linearly dependent on the preceding charges")]
    DependentCharge { index: usize },

    #[error("observable is a linear combination of conserved charges")]
    ObservableInChargeSpan,

    #[error(
        "initial state leaves the projected subspace (|Q vec(rho0)| = {0:e}); \
         an inhomogeneous term is required, use the rotated or general builder"
    )]
    InhomogeneousInitialState(f64),

    #[error("stability guard violated: dt * |K(0)| = {0} >= 1; use a smaller dt")]
    StabilityGuard(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("sample series are defined on different time grids")]
    GridMismatch,

    #[error("malformed problem: {0}")]
    MalformedProblem(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown {kind} `{name}` (expected one of: {expected})")]
    UnknownName {
        kind: &'static str,
        name: String,
        expected: String,
    },

    #[error("numerical postcondition failed: {0}")]
    Numerical(String),
}

use thiserror::Error;

/// Errors raised by the sufficiency toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix has non-finite entries")]
    NotFinite,

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("function undefined at retained eigenvalue {eigenvalue:.6e}")]
    Domain { eigenvalue: f64 },

    #[error("channel is not unital (residual {residual:.3e})")]
    NotUnital { residual: f64 },

    #[error("channel is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("channel has no Kraus operators")]
    EmptyKraus,

    #[error("{what} is not faithful; compress to its support first")]
    NotFaithful { what: String },

    #[error("support of {what} is not dominated (excess {excess:.3e})")]
    SupportViolation { what: String, excess: f64 },

    #[error("empty family of states")]
    EmptyFamily,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("quadrature did not converge: error estimate {estimate:.3e} after {panels} panels")]
    Quadrature { estimate: f64, panels: usize },

    #[error("degenerate spectrum after {attempts} attempts: {detail}")]
    DegenerateSpectrum { attempts: usize, detail: String },

    #[error("subalgebra is not invariant under the modular group (deviation {deviation:.3e})")]
    NotModularInvariant { deviation: f64 },

    #[error("generated algebra did not stabilize under grid refinement: {log}")]
    NonStabilizing { log: String },

    #[error("not sufficient (residual {residual:.3e})")]
    Insufficient { residual: f64 },

    #[error("reconstruction residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Reconstruction { residual: f64, tolerance: f64 },

    #[error("Newton iteration left the mean-value region (residual {residual:.3e}, last iterate {last_iterate:?})")]
    RegionExit { last_iterate: Vec<f64>, residual: f64 },

    #[error("not an equality case (gap {gap:.3e})")]
    NotEqualityCase { gap: f64 },

    #[error("dimension {dim} exceeds the limit {limit} for this operation")]
    TooLarge { dim: usize, limit: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

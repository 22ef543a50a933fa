use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnqiError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max |M - M^†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator trace is {trace}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("integrand returned a non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("ensemble `{label}` already carries two copies")]
    AlreadyDoubled { label: String },

    #[error("no closed form is known for ensemble `{label}`")]
    UnknownFamily { label: String },

    #[error("{what} did not converge (best residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, SnqiError>;

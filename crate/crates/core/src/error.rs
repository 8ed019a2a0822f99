use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {n}: need a power of two with n >= 8")]
    InvalidGrid { n: usize },

    #[error("sample {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("inverse transform left an imaginary residue of {residue:e}")]
    NonRealResult { residue: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {abs_tol:e} within {max_subdivisions} subdivisions (estimated error {estimate:e})")]
    QuadratureFailure {
        abs_tol: f64,
        max_subdivisions: usize,
        estimate: f64,
    },

    #[error("certificate failed for {property}: {violations} violating points, worst at ({x}, {y}) with slack {slack:e}")]
    CertificateFailure {
        property: String,
        violations: usize,
        x: f64,
        y: f64,
        slack: f64,
    },

    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

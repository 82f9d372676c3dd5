use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid signal spec: {0}")]
    InvalidSpec(&'static str),

    #[error("signal is not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    /// The denoiser could not be fitted to the current iterate.
    #[error("degenerate iterate: {0}")]
    DegenerateIterate(&'static str),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("non-finite value at quadrature node {0}")]
    NonFinite(f64),

    #[error("fixed-point iteration did not converge in {0} steps")]
    ConvergenceFailure(usize),

    #[error("state evolution is degenerate: {0}")]
    DegenerateSe(&'static str),

    /// The new denoised vector lies (numerically) in the span of the current basis.
    #[error("basis extension is degenerate at index {index} (residual norm {residual})")]
    BasisDegenerate { index: usize, residual: f64 },

    /// The decomposition identity failed; this is a bug signal, not a statistical event.
    #[error("ledger inconsistency at t = {t}: residual outside basis span has norm {outside}")]
    LedgerInconsistency { t: usize, outside: f64 },

    #[error("initialization failed: {0}")]
    InitializationFailure(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

impl Error {
    /// Stable numeric code, used by the harness when a trial fails.
    pub fn code(&self) -> u32 {
        match self {
            Error::InvalidDimension(_) => 1,
            Error::DimensionMismatch { .. } => 2,
            Error::InvalidSpec(_) => 3,
            Error::NotUnitNorm { .. } => 4,
            Error::NotSymmetric { .. } => 5,
            Error::DegenerateIterate(_) => 6,
            Error::Domain(_) => 7,
            Error::NonFinite(_) => 8,
            Error::ConvergenceFailure(_) => 9,
            Error::DegenerateSe(_) => 10,
            Error::BasisDegenerate { .. } => 11,
            Error::LedgerInconsistency { .. } => 12,
            Error::InitializationFailure(_) => 13,
            Error::InvalidParameter(_) => 14,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: expected at least 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operation requires dimension {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("Bloch vector length {0} exceeds 1")]
    InvalidBloch(f64),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("free set: {0}")]
    InvalidFreeSet(String),

    #[error("unsupported free-set variant for this operation: {0}")]
    UnsupportedVariant(&'static str),

    #[error("matrix is numerically singular (condition number {0:.3e})")]
    Singular(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis reconstruction found no consistent candidate")]
    NoCandidates,

    #[error("basis reconstruction is degenerate: the constraints admit a continuum of bases")]
    DegenerateContinuum,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Errors caused by bad user input rather than numerical breakdown.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_)
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedDimension { .. }
                | Error::InvalidBloch(_)
                | Error::InvalidFreeSet(_)
                | Error::UnsupportedVariant(_)
                | Error::InvalidArgument(_)
                | Error::Parse(_)
        )
    }
}

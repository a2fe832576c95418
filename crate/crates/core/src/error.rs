use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("region is empty")]
    EmptyRegion,
    #[error("regions overlap at {0} point(s)")]
    Overlap(usize),
    #[error("singular system at pivot {0}")]
    Singular(usize),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("quadrature did not converge: estimated error {error:e} after {panels} panels")]
    Quadrature { error: f64, panels: usize },
    #[error("energy is {distance} from the spectrum, need at least {required}")]
    TooCloseToSpectrum { distance: f64, required: f64 },
    #[error("operator is not a one-dimensional Schrödinger operator")]
    NotSchrodinger,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

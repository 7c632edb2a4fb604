use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("finite element function belongs to mesh generation {found}, expected {expected}")]
    GenerationMismatch { expected: u64, found: u64 },

    #[error("non-finite evaluation of the nonlinearity on element {element}")]
    NonFinite { element: usize },

    #[error("numerically singular matrix ({0})")]
    SingularMatrix(String),

    #[error("point {point:?} lies outside the mesh")]
    OutsideDomain { point: [f64; 2] },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is defined but deliberately not implemented for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Two operands have incompatible shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A quadrature grid or Fock cutoff is too coarse for the requested accuracy.
    #[error("numerical resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

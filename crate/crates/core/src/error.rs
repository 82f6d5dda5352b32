//! Error type shared by all modules of the crate.

use std::fmt;

/// Errors reported by numerical routines in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    Domain(String),
    /// A value exceeded the representable range of `f64`.
    Overflow(String),
    /// An iterative computation hit its term cap before the tail bound was met.
    NonConvergence(String),
    /// A spectral window is too narrow for the requested accuracy.
    WindowTooSmall(String),
    /// Two grid objects live on incompatible windows or measures.
    WindowMismatch(String),
    /// A built object failed its internal cross-validation.
    Validation(String),
    /// The dense eigensolver did not converge.
    Eigensolver(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Overflow(msg) => write!(f, "overflow: {msg}"),
            Error::NonConvergence(msg) => write!(f, "non-convergence: {msg}"),
            Error::WindowTooSmall(msg) => write!(f, "window too small: {msg}"),
            Error::WindowMismatch(msg) => write!(f, "window mismatch: {msg}"),
            Error::Validation(msg) => write!(f, "validation failure: {msg}"),
            Error::Eigensolver(msg) => write!(f, "eigensolver failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

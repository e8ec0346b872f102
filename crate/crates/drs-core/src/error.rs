//! Error types shared by all modules of the crate.
//!
//! Every fallible operation returns [`Error`]. The variants separate the two
//! failure classes a caller can act on:
//!
//! | Variant        | Meaning                                            | Typical reaction      |
//! |----------------|----------------------------------------------------|-----------------------|
//! | `Domain`       | an argument is outside the mathematical domain     | fix the input         |
//! | `Unsupported`  | the parameter regime is valid but not implemented  | switch regime         |
//! | `Capacity`     | the request exceeds a documented size/memory cap   | shrink the request    |
//! | `Degenerate`   | the data cannot determine the requested quantity   | supply richer data    |
//!
//! All variants carry a human-readable message with the offending values
//! already formatted in, so call sites can bubble them up unchanged.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Error raised by the numerical operations in this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (e.g. a non-positive argument to `log_gamma`, an exponent that makes
    /// a tail series diverge, or an empty interval with `a > b`).
    Domain(String),
    /// The parameters are legitimate but the operation does not cover that
    /// regime (e.g. dyadic block decompositions with `beta > 1`).
    Unsupported(String),
    /// The request would exceed a documented size cap (e.g. exact
    /// enumeration beyond 25 terms, or a sieve beyond 10^9).
    Capacity(String),
    /// The input data is degenerate for the requested computation
    /// (e.g. a slope fit through fewer than two distinct abscissae).
    Degenerate(String),
}

impl Error {
    /// True when the error indicates bad user input rather than an internal
    /// limitation. Used by callers that map errors onto process exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Degenerate(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported regime: {msg}"),
            Error::Capacity(msg) => write!(f, "capacity exceeded: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

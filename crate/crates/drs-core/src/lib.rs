//! Numerical laboratory for random Dirichlet-type series with sparse
//! Bernoulli coefficients.
//!
//! The crate studies sums `S = sum_n I_n * n^(-s)` where `I_n` are
//! independent Bernoulli(`n^(-beta)`) indicators — the coefficient pattern
//! produced by record events of i.i.d. sequences — and provides:
//!
//! - [`series`]: the parameter space, convergence trichotomy, certified
//!   tail bounds and dyadic index decompositions;
//! - [`numerics`]: the floating-point kernels everything else leans on
//!   (log-gamma, compensated summation, error-free transforms, line fits,
//!   reproducible splittable random streams).
//!
//! All randomized computations are driven by [`numerics::RngStream`] and are
//! bitwise reproducible for a fixed seed, independent of platform and
//! thread count.

pub mod charfn;
pub mod error;
pub mod exact;
pub mod hist;
pub mod numerics;
pub mod primes;
pub mod records;
pub mod sampler;
pub mod series;

pub use error::{Error, Result};

/// Default concrete scalar for the laboratory: all tolerance contracts in
/// this crate are stated for 64-bit IEEE arithmetic.
pub type Real = f64;

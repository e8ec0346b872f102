//! Model definition: the random series, its parameters, and structural
//! decompositions of its index set.
//!
//! The object of study is the random sum
//!
//! ```text
//!     S = sum_n I_n * v_n
//! ```
//!
//! where the `I_n` are independent Bernoulli indicators with
//! `P(I_n = 1) = n^(-beta)` and the deterministic term values `v_n` depend
//! on the variant:
//!
//! | Variant        | index set      | `v_n`              | notes                     |
//! |----------------|----------------|--------------------|---------------------------|
//! | `AllIntegers`  | `n >= 1`       | `n^(-s)`           | `n = 1` always fires      |
//! | `PrimesOnly`   | primes `p >= 2`| `p^(-s)`           | sparse index set          |
//! | `LogProduct`   | `n >= 2`       | `-ln(1 - 1/n)`     | requires `s = beta = 1`;  |
//! |                |                |                    | `exp(-S)` is a product of |
//! |                |                |                    | record-driven factors     |
//!
//! # Provided operations
//!
//! | Item                 | Purpose                                           |
//! |----------------------|---------------------------------------------------|
//! | [`SeriesParams`]     | validated `(s, beta, variant)` triple             |
//! | [`SeriesParams::classify`] | almost-sure convergence / law classification |
//! | [`tail_mean_bound`]  | upper bound on the mean of a truncation tail      |
//! | [`power_tail_bound`] | upper bound on `sum_{n>N} n^(-a)`, `a > 1`        |
//! | [`make_blocks`]      | dyadic block decomposition between two exponents  |
//!
//! # Design notes
//!
//! - Classification is a trichotomy in `(s, beta)`: the series diverges
//!   almost surely iff `s + beta <= 1`; it is a finite sum of finitely many
//!   terms (hence purely atomic in law) iff `beta > 1`; otherwise it
//!   converges with a candidate absolutely-continuous law. The variants
//!   share these boundaries.
//! - Tail bounds are certified upper bounds (exact partial sum plus an
//!   integral majorant), not estimates; callers may subtract nothing.
//! - Dyadic blocks `J_k = (2^k, 2^(k+1)]` between data-dependent exponents
//!   are the index-set geometry used by the oscillatory-sum machinery.

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use serde::Serialize;

// ============================================================================
// Parameters and classification
// ============================================================================

/// Which deterministic term sequence multiplies the Bernoulli indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVariant {
    /// Terms `n^(-s)` over every integer `n >= 1`.
    AllIntegers,
    /// Terms `p^(-s)` over the primes.
    PrimesOnly,
    /// Terms `-ln(1 - 1/n)` over `n >= 2`, with `s = beta = 1`; the series
    /// is the negative logarithm of a product of factors `1 - I_n/n`.
    LogProduct,
}

/// Almost-sure behaviour of the random series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceClass {
    /// The sum of term means diverges; the series is a.s. infinite.
    Diverges,
    /// Only finitely many indicators fire a.s.; the law is purely atomic.
    AtomicSingular,
    /// The series converges a.s. with infinitely many active terms; the
    /// limiting law is a candidate for absolute continuity.
    ConvergesAcCandidate,
}

/// Validated parameter triple for the random series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesParams {
    s: f64,
    beta: f64,
    variant: SeriesVariant,
}

impl SeriesParams {
    /// Parameters for the integer-indexed series with exponent pair
    /// `(s, beta)`.
    ///
    /// # Errors
    ///
    /// `Error::Domain` unless `s > 0` and `beta >= 0`, both finite.
    pub fn new(s: f64, beta: f64) -> Result<Self> {
        Self::with_variant(s, beta, SeriesVariant::AllIntegers)
    }

    /// Parameters with an explicit variant.
    ///
    /// # Errors
    ///
    /// `Error::Domain` unless `s > 0` and `beta >= 0` are finite, and (for
    /// [`SeriesVariant::LogProduct`]) `s = beta = 1`, the only regime in
    /// which that variant is defined.
    pub fn with_variant(s: f64, beta: f64, variant: SeriesVariant) -> Result<Self> {
        if !s.is_finite() || !(s > 0.0) {
            return Err(Error::Domain(format!(
                "series exponent s must be finite and > 0, got {s}"
            )));
        }
        if !beta.is_finite() || !(beta >= 0.0) {
            return Err(Error::Domain(format!(
                "sparsity exponent beta must be finite and >= 0, got {beta}"
            )));
        }
        if variant == SeriesVariant::LogProduct && (s != 1.0 || beta != 1.0) {
            return Err(Error::Domain(format!(
                "log-product variant is defined only for s = 1, beta = 1, got s = {s}, beta = {beta}"
            )));
        }
        Ok(SeriesParams { s, beta, variant })
    }

    /// Convenience constructor for the log-product variant (`s = beta = 1`).
    pub fn log_product() -> Self {
        SeriesParams {
            s: 1.0,
            beta: 1.0,
            variant: SeriesVariant::LogProduct,
        }
    }

    /// Value exponent `s`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Sparsity exponent `beta`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Term-sequence variant.
    pub fn variant(&self) -> SeriesVariant {
        self.variant
    }

    /// Smallest index carrying a term under this variant.
    pub fn first_index(&self) -> u64 {
        match self.variant {
            SeriesVariant::AllIntegers => 1,
            SeriesVariant::PrimesOnly | SeriesVariant::LogProduct => 2,
        }
    }

    /// `P(I_n = 1) = n^(-beta)`.
    ///
    /// For `n = 1` this is exactly 1 for every `beta`: the first integer
    /// term always fires.
    #[inline]
    pub fn term_probability(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        neg_power(n, self.beta)
    }

    /// Deterministic term value `v_n` for the variant.
    #[inline]
    pub fn term_value(&self, n: u64) -> f64 {
        debug_assert!(n >= self.first_index());
        match self.variant {
            SeriesVariant::AllIntegers | SeriesVariant::PrimesOnly => neg_power(n, self.s),
            SeriesVariant::LogProduct => -(-1.0 / n as f64).ln_1p(),
        }
    }

    /// Trichotomy of the almost-sure behaviour (see module docs). The three
    /// classes partition the valid parameter region.
    pub fn classify(&self) -> ConvergenceClass {
        if self.s + self.beta <= 1.0 {
            ConvergenceClass::Diverges
        } else if self.beta > 1.0 {
            ConvergenceClass::AtomicSingular
        } else {
            ConvergenceClass::ConvergesAcCandidate
        }
    }
}

/// `n^(-a)` with fast paths for the exponents that dominate practical use.
#[inline]
pub(crate) fn neg_power(n: u64, a: f64) -> f64 {
    let x = n as f64;
    if a == 1.0 {
        1.0 / x
    } else if a == 2.0 {
        1.0 / (x * x)
    } else if a == 0.5 {
        1.0 / x.sqrt()
    } else if a == 0.0 {
        1.0
    } else {
        x.powf(-a)
    }
}

// ============================================================================
// Tail bounds
// ============================================================================

/// Size cap for the exact-partial-sum phase of [`power_tail_bound`]; beyond
/// this the loop over `9 * n_from` terms stops being instantaneous.
const POWER_TAIL_CAP: u64 = 1 << 26;

/// Certified upper bound on the tail `sum_{n > n_from} n^(-a)` for `a > 1`.
///
/// Computed as the exact sum over `n_from < n <= 10 * n_from` plus the
/// integral majorant `(10 n_from)^(1-a) / (a - 1)` for the remainder, so the
/// bound overshoots the true tail by well under 0.1% in practice.
///
/// # Errors
///
/// - `Error::Domain` if `a <= 1` (the tail diverges) or `n_from < 1`.
/// - `Error::Capacity` if `n_from` exceeds `2^26`.
pub fn power_tail_bound(a: f64, n_from: u64) -> Result<f64> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "power tail requires exponent a > 1, got {a}"
        )));
    }
    if n_from < 1 {
        return Err(Error::Domain(format!(
            "power tail start must be >= 1, got {n_from}"
        )));
    }
    if n_from > POWER_TAIL_CAP {
        return Err(Error::Capacity(format!(
            "power_tail_bound partial sum covers 9 * n_from terms; n_from = {n_from} exceeds cap {POWER_TAIL_CAP}"
        )));
    }
    let mut head = CompensatedSum::new();
    for n in (n_from + 1)..=(10 * n_from) {
        head.add(neg_power(n, a));
    }
    Ok(head.value() + power_tail_integral(a, 10 * n_from))
}

/// Integral-only upper bound `n_from^(1-a) / (a - 1)` on the same tail.
/// Looser than [`power_tail_bound`] (by a factor up to `1 + a/n_from`) but
/// O(1), so hot paths can certify truncations of any size.
pub(crate) fn power_tail_integral(a: f64, n_from: u64) -> f64 {
    debug_assert!(a > 1.0 && n_from >= 1);
    neg_power(n_from, a - 1.0) / (a - 1.0)
}

/// Certified upper bound on the mean of the truncation tail
/// `E[ sum_{n > n_from} I_n v_n ]`.
///
/// - `AllIntegers`: the term mean is `n^(-(s+beta))`, so this is
///   [`power_tail_bound`] at exponent `s + beta`.
/// - `PrimesOnly`: bounded by the integer tail (conservative).
/// - `LogProduct`: the term mean is `-ln(1 - 1/n)/n <= 1/(n(n-1))`, whose
///   tail telescopes to exactly `1 / n_from`.
///
/// # Errors
///
/// `Error::Domain` if the tail mean diverges (`s + beta <= 1`), plus the
/// error conditions of [`power_tail_bound`].
pub fn tail_mean_bound(params: &SeriesParams, n_from: u64) -> Result<f64> {
    match params.variant() {
        SeriesVariant::AllIntegers | SeriesVariant::PrimesOnly => {
            let a = params.s() + params.beta();
            if a <= 1.0 {
                return Err(Error::Domain(format!(
                    "tail mean diverges for s + beta = {a} <= 1"
                )));
            }
            power_tail_bound(a, n_from)
        }
        SeriesVariant::LogProduct => {
            if n_from < 1 {
                return Err(Error::Domain(format!(
                    "tail start must be >= 1, got {n_from}"
                )));
            }
            Ok(1.0 / n_from as f64)
        }
    }
}

// ============================================================================
// Dyadic blocks
// ============================================================================

/// One dyadic block `J_k = (2^k, 2^(k+1)]` of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DyadicBlock {
    /// Block exponent `k`.
    pub k: u32,
}

impl DyadicBlock {
    /// Smallest integer in the block: `2^k + 1`.
    pub fn lo(&self) -> u64 {
        (1u64 << self.k) + 1
    }

    /// Largest integer in the block: `2^(k+1)`.
    pub fn hi(&self) -> u64 {
        1u64 << (self.k + 1)
    }

    /// The block as an inclusive integer range.
    pub fn range(&self) -> std::ops::RangeInclusive<u64> {
        self.lo()..=self.hi()
    }

    /// Number of integers in the block (`2^k`).
    pub fn len(&self) -> u64 {
        1u64 << self.k
    }

    /// Dyadic blocks are never empty.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A contiguous run of dyadic blocks `J_k`, `k_lo <= k < k_hi`, whose union
/// is the integer interval `(2^k_lo, 2^k_hi]`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockDecomposition {
    /// Oscillation order the decomposition was built for.
    pub q: u32,
    /// Frequency parameter the exponents were derived from.
    pub t: f64,
    /// Lower exponent (exclusive endpoint `2^k_lo`).
    pub k_lo: u32,
    /// Upper exponent (inclusive endpoint `2^k_hi`).
    pub k_hi: u32,
}

impl BlockDecomposition {
    /// Iterator over the blocks, in increasing `k`.
    pub fn blocks(&self) -> impl Iterator<Item = DyadicBlock> + '_ {
        (self.k_lo..self.k_hi).map(|k| DyadicBlock { k })
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        (self.k_hi - self.k_lo) as usize
    }

    /// True when the exponent window is empty.
    pub fn is_empty(&self) -> bool {
        self.k_hi <= self.k_lo
    }
}

/// Builds the dyadic block decomposition used by the oscillatory-sum
/// analysis at frequency `t` and oscillation order `q`.
///
/// The exponent window depends on the sparsity regime:
///
/// - `beta = 1`: `k_lo = floor(log2(t) / (q + 2 + s))`,
///   `k_hi = floor(log2(t) / s)` — at most `2^k_hi` terms can carry a
///   non-negligible oscillation at frequency `t`, and blocks below `k_lo`
///   are absorbed by the trivial bound at order `q`.
/// - `beta < 1` (only `q = 0` is defined):
///   `k_lo = floor(log2(t) / (s + 2))`, `k_hi = floor(log2(t) / (s + 1))`
///   — the window in which the oscillatory gain beats the indicator
///   density.
///
/// The decomposition is empty when `k_hi <= k_lo` (small `t`).
///
/// # Errors
///
/// - `Error::Domain` if `t < 1` or `t` is not finite.
/// - `Error::Unsupported` for `beta > 1` (no block analysis is defined
///   there) and for `beta < 1` with `q > 0`.
/// - `Error::Capacity` if the window would overflow 64-bit block endpoints.
pub fn make_blocks(params: &SeriesParams, q: u32, t: f64) -> Result<BlockDecomposition> {
    if !t.is_finite() || t < 1.0 {
        return Err(Error::Domain(format!(
            "block decomposition requires finite t >= 1, got {t}"
        )));
    }
    let s = params.s();
    let beta = params.beta();
    let log2_t = t.log2();
    let (k_lo, k_hi) = if beta == 1.0 {
        let lo = (log2_t / (q as f64 + 2.0 + s)).floor();
        let hi = (log2_t / s).floor();
        (lo, hi)
    } else if beta < 1.0 {
        if q != 0 {
            return Err(Error::Unsupported(format!(
                "block decomposition for beta < 1 is defined only at q = 0, got q = {q}"
            )));
        }
        let lo = (log2_t / (s + 2.0)).floor();
        let hi = (log2_t / (s + 1.0)).floor();
        (lo, hi)
    } else {
        return Err(Error::Unsupported(format!(
            "block decomposition is not defined for beta = {beta} > 1"
        )));
    };
    if k_hi > 62.0 {
        return Err(Error::Capacity(format!(
            "block endpoint 2^{k_hi} exceeds the 64-bit index range"
        )));
    }
    let k_lo = k_lo as u32;
    let k_hi = (k_hi as u32).max(k_lo);
    Ok(BlockDecomposition { q, t, k_lo, k_hi })
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_validation() {
        assert!(SeriesParams::new(1.0, 1.0).is_ok());
        assert!(SeriesParams::new(0.0, 1.0).is_err());
        assert!(SeriesParams::new(-1.0, 1.0).is_err());
        assert!(SeriesParams::new(1.0, -0.1).is_err());
        assert!(SeriesParams::new(f64::NAN, 1.0).is_err());
        assert!(SeriesParams::new(1.0, f64::INFINITY).is_err());
        // log-product variant is pinned to s = beta = 1
        assert!(SeriesParams::with_variant(1.0, 1.0, SeriesVariant::LogProduct).is_ok());
        assert!(SeriesParams::with_variant(2.0, 1.0, SeriesVariant::LogProduct).is_err());
        assert!(SeriesParams::with_variant(1.0, 0.5, SeriesVariant::LogProduct).is_err());
    }

    #[test]
    fn classification_examples() {
        let class = |s, b| SeriesParams::new(s, b).unwrap().classify();
        assert_eq!(class(1.0, 1.0), ConvergenceClass::ConvergesAcCandidate);
        assert_eq!(class(0.6, 1.0), ConvergenceClass::ConvergesAcCandidate);
        assert_eq!(class(2.2, 1.0), ConvergenceClass::ConvergesAcCandidate);
        assert_eq!(class(1.0, 0.5), ConvergenceClass::ConvergesAcCandidate);
        // boundary: s + beta = 1 diverges
        assert_eq!(class(0.5, 0.5), ConvergenceClass::Diverges);
        assert_eq!(class(0.05, 0.9), ConvergenceClass::Diverges);
        // beta > 1: finitely many hits, atomic law
        assert_eq!(class(0.2, 1.5), ConvergenceClass::AtomicSingular);
        assert_eq!(class(3.0, 1.000001), ConvergenceClass::AtomicSingular);
    }

    #[test]
    fn term_values_and_probabilities() {
        let p = SeriesParams::new(2.0, 0.5).unwrap();
        assert_eq!(p.term_probability(1), 1.0);
        assert!((p.term_probability(4) - 0.5).abs() < 1e-15);
        assert!((p.term_value(10) - 0.01).abs() < 1e-17);

        let lp = SeriesParams::log_product();
        assert_eq!(lp.first_index(), 2);
        // v_2 = -ln(1/2) = ln 2
        assert!((lp.term_value(2) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((lp.term_probability(3) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn power_tail_bound_brackets_truth() {
        // Reference: sum_{n > 100} n^-2, brute-forced to 1e7 with a
        // compensated accumulator; the remainder beyond 1e7 is < 1e-7.
        let mut acc = CompensatedSum::new();
        for n in 101u64..=10_000_000 {
            acc.add(1.0 / (n as f64 * n as f64));
        }
        let true_lo = acc.value();
        let true_hi = true_lo + 1.0e-7;
        let bound = power_tail_bound(2.0, 100).unwrap();
        assert!(bound >= true_lo, "bound {bound} below truth {true_lo}");
        assert!(
            bound <= true_hi * 1.0001,
            "bound {bound} overshoots truth {true_hi} by more than 0.01%"
        );
    }

    #[test]
    fn tail_mean_bound_example_bracket() {
        // s = 1.5, beta = 0.5: tail mean = sum_{n>100} n^-2, which lies in
        // [1/101, 1/100]; the certified bound must land in [1/101, 1/99].
        let p = SeriesParams::new(1.5, 0.5).unwrap();
        let b = tail_mean_bound(&p, 100).unwrap();
        assert!(b >= 1.0 / 101.0 && b <= 1.0 / 99.0, "bound {b} outside bracket");
    }

    #[test]
    fn tail_mean_bound_log_product_telescopes() {
        let lp = SeriesParams::log_product();
        assert_eq!(tail_mean_bound(&lp, 50).unwrap(), 0.02);
    }

    #[test]
    fn tail_mean_bound_rejects_divergent() {
        let p = SeriesParams::new(0.5, 0.5).unwrap();
        assert!(matches!(tail_mean_bound(&p, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn power_tail_bound_domain_and_caps() {
        assert!(matches!(power_tail_bound(1.0, 10), Err(Error::Domain(_))));
        assert!(matches!(power_tail_bound(0.5, 10), Err(Error::Domain(_))));
        assert!(matches!(power_tail_bound(2.0, 0), Err(Error::Domain(_))));
        assert!(matches!(
            power_tail_bound(2.0, (1 << 26) + 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn make_blocks_reference_windows() {
        let p = SeriesParams::new(1.0, 1.0).unwrap();
        let d = make_blocks(&p, 0, (2.0_f64).powi(60)).unwrap();
        assert_eq!((d.k_lo, d.k_hi), (20, 60));
        assert_eq!(d.len(), 40);
        let first = d.blocks().next().unwrap();
        assert_eq!(first.lo(), (1 << 20) + 1);
        assert_eq!(first.hi(), 1 << 21);

        // t = 2: single block {2}
        let d2 = make_blocks(&p, 0, 2.0).unwrap();
        assert_eq!((d2.k_lo, d2.k_hi), (0, 1));
        let b = d2.blocks().next().unwrap();
        assert_eq!(b.range().collect::<Vec<_>>(), vec![2]);

        // beta < 1 window
        let p_half = SeriesParams::new(1.0, 0.5).unwrap();
        let dh = make_blocks(&p_half, 0, (2.0_f64).powi(60)).unwrap();
        assert_eq!((dh.k_lo, dh.k_hi), (20, 30));
    }

    #[test]
    fn make_blocks_unsupported_regimes() {
        let p_half = SeriesParams::new(1.0, 0.5).unwrap();
        assert!(matches!(
            make_blocks(&p_half, 1, 1e6),
            Err(Error::Unsupported(_))
        ));
        let p_atomic = SeriesParams::new(1.0, 1.5).unwrap();
        assert!(matches!(
            make_blocks(&p_atomic, 0, 1e6),
            Err(Error::Unsupported(_))
        ));
        let p = SeriesParams::new(1.0, 1.0).unwrap();
        assert!(matches!(make_blocks(&p, 0, 0.5), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn prop_classification_is_a_partition(
            s in 0.01_f64..4.0,
            beta in 0.0_f64..3.0,
        ) {
            let c = SeriesParams::new(s, beta).unwrap().classify();
            let diverges = s + beta <= 1.0;
            let atomic = beta > 1.0;
            match c {
                ConvergenceClass::Diverges => prop_assert!(diverges),
                ConvergenceClass::AtomicSingular => {
                    prop_assert!(!diverges && atomic)
                }
                ConvergenceClass::ConvergesAcCandidate => {
                    prop_assert!(!diverges && !atomic)
                }
            }
        }

        #[test]
        fn prop_blocks_tile_the_window(
            s in 0.3_f64..3.0,
            q in 0u32..3,
            frac in 0.0_f64..1.0,
        ) {
            let p = SeriesParams::new(s, 1.0).unwrap();
            // keep k_hi = floor(log2(t)/s) within the 64-bit index range
            let t = (frac * 61.9 * s).exp2();
            let d = make_blocks(&p, q, t).unwrap();
            // blocks are adjacent: each hi + 1 = next lo, union covers
            // (2^k_lo, 2^k_hi] without gaps or overlaps
            let mut expected_lo = (1u64 << d.k_lo) + 1;
            for b in d.blocks() {
                prop_assert_eq!(b.lo(), expected_lo);
                prop_assert!(b.hi() == 2 * (b.lo() - 1));
                expected_lo = b.hi() + 1;
            }
            if !d.is_empty() {
                prop_assert_eq!(expected_lo, (1u64 << d.k_hi) + 1);
            }
            // exponent ordering from the construction
            prop_assert!(d.k_lo <= d.k_hi);
        }
    }
}

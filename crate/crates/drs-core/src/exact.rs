//! Exact distribution of small truncations by direct convolution.
//!
//! A truncation with `m` random indices takes one of `2^m` values, each a
//! subset sum of the term values. This module enumerates that atomic
//! distribution exactly and evaluates functionals of it — moments, interval
//! probabilities, and the characteristic function — to near machine
//! precision. It is the reference oracle against which the Monte Carlo
//! sampler and the product-form characteristic function are validated.
//!
//! # Provided operations
//!
//! | Item                        | Purpose                                   |
//! |-----------------------------|-------------------------------------------|
//! | [`AtomicDistribution`]      | sorted `(value, probability)` atom list   |
//! | [`AtomicDistribution::enumerate`] | build by iterated convolution       |
//! | [`AtomicDistribution::exact_moment`] | `E[S^r]`                         |
//! | [`AtomicDistribution::exact_charfn`] | `E[exp(-2 pi i t S)]`            |
//! | [`AtomicDistribution::interval_prob`] | `P(a <= S <= b)`                |
//!
//! # Precision
//!
//! Atom values are accumulated in double-double arithmetic (an unevaluated
//! `hi + lo` pair carrying ~31 significant digits) and rounded to `f64`
//! once, so subset sums are correctly rounded and exact ties — distinct
//! index sets with identical sums, e.g. `1/2 = 1/3 + 1/6` — merge reliably.
//! Characteristic-function phases `t * value mod 1` are reduced with an
//! error-free product, keeping the phase error near `1e-16` even at large
//! `t`. Atom probabilities are plain products of `p_n` and `1 - p_n`
//! factors accumulated per convolution step.
//!
//! # Size cap
//!
//! Enumeration is capped at 25 terms (`2^24` atoms for the dense integer
//! variant after the forced first term). Beyond that, memory and merge
//! time grow geometrically; use the Monte Carlo sampler instead.

use crate::error::{Error, Result};
use crate::numerics::{two_prod, two_sum, CompensatedSum};
use crate::series::{SeriesParams, SeriesVariant};
use num_complex::Complex64;

/// Largest truncation level accepted by [`AtomicDistribution::enumerate`].
pub const ENUMERATION_CAP: u64 = 25;

/// Relative tolerance below which two atom values are considered the same
/// atom and merged. Well above the double-double accumulation error
/// (~1e-31) and well below any interval endpoint resolution in use.
const MERGE_REL_TOL: f64 = 1e-14;

/// One atom: a double-double value and its probability mass.
#[derive(Debug, Clone, Copy)]
struct Atom {
    hi: f64,
    lo: f64,
    prob: f64,
}

impl Atom {
    #[inline]
    fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// Double-double shift by a single f64 term.
    #[inline]
    fn shifted(&self, v: f64) -> (f64, f64) {
        let (s, e) = two_sum(self.hi, v);
        let lo = self.lo + e;
        // renormalize so that hi carries the leading bits
        let (hi, lo) = quick_two_sum(s, lo);
        (hi, lo)
    }
}

/// Fast TwoSum, valid because `|a| >= |b|` at every call site.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// The exact law of a truncated series: finitely many atoms, sorted by
/// value, probabilities summing to one.
#[derive(Debug, Clone)]
pub struct AtomicDistribution {
    params: SeriesParams,
    n_trunc: u64,
    atoms: Vec<Atom>,
}

impl AtomicDistribution {
    /// Enumerates the exact distribution of the truncation `n <= n_trunc`.
    ///
    /// # Errors
    ///
    /// - `Error::Domain` if `n_trunc` is below the variant's first index.
    /// - `Error::Capacity` if `n_trunc` exceeds [`ENUMERATION_CAP`].
    pub fn enumerate(params: &SeriesParams, n_trunc: u64) -> Result<Self> {
        let first = params.first_index();
        if n_trunc < first {
            return Err(Error::Domain(format!(
                "truncation {n_trunc} is below the first index {first} of the variant"
            )));
        }
        if n_trunc > ENUMERATION_CAP {
            return Err(Error::Capacity(format!(
                "exact enumeration capped at {ENUMERATION_CAP} terms, got {n_trunc}"
            )));
        }

        // Deterministic offset: indices with p_n = 1.
        let mut base = 0.0_f64;
        let mut terms: Vec<(f64, f64)> = Vec::new(); // (value, prob) random terms
        for n in first..=n_trunc {
            if params.variant() == SeriesVariant::PrimesOnly && !is_small_prime(n) {
                continue;
            }
            let p = params.term_probability(n);
            if p >= 1.0 {
                base += params.term_value(n);
            } else {
                terms.push((params.term_value(n), p));
            }
        }

        let mut atoms = vec![Atom {
            hi: base,
            lo: 0.0,
            prob: 1.0,
        }];
        for &(v, p) in &terms {
            atoms = convolve_step(&atoms, v, p);
        }
        Ok(AtomicDistribution {
            params: *params,
            n_trunc,
            atoms,
        })
    }

    /// Parameters of the enumerated truncation.
    pub fn params(&self) -> &SeriesParams {
        &self.params
    }

    /// Truncation level.
    pub fn n_trunc(&self) -> u64 {
        self.n_trunc
    }

    /// Number of distinct atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// True iff there are no atoms (cannot happen for valid inputs).
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Iterator over `(value, probability)` pairs, values ascending.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().map(|a| (a.value(), a.prob))
    }

    /// Total probability mass (should be 1 up to accumulated rounding).
    pub fn total_mass(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            acc.add(a.prob);
        }
        acc.value()
    }

    /// Exact `r`-th moment `E[S^r]`.
    pub fn exact_moment(&self, r: u32) -> f64 {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            acc.add(a.prob * a.value().powi(r as i32));
        }
        acc.value()
    }

    /// Exact characteristic function `E[exp(-2 pi i t S)]` in the
    /// frequency convention `e^(-2 pi i t x)`.
    ///
    /// The phase `t * value` is reduced modulo 1 with an error-free
    /// product, so the result stays accurate for `t` far beyond the point
    /// where naive `cos(2 pi t v)` loses digits.
    pub fn exact_charfn(&self, t: f64) -> Complex64 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for a in &self.atoms {
            // t*v = p + e exactly; only the fractional part matters
            let (p, e) = two_prod(t, a.hi);
            let frac = p.fract() + (e + t * a.lo);
            let theta = -2.0 * std::f64::consts::PI * frac;
            re.add(a.prob * theta.cos());
            im.add(a.prob * theta.sin());
        }
        Complex64::new(re.value(), im.value())
    }

    /// Probability of the closed interval: `P(a <= S <= b)`.
    ///
    /// # Errors
    ///
    /// `Error::Domain` if the endpoints are non-finite or `a > b`.
    pub fn interval_prob(&self, a: f64, b: f64) -> Result<f64> {
        if !a.is_finite() || !b.is_finite() || a > b {
            return Err(Error::Domain(format!(
                "interval endpoints must be finite with a <= b, got [{a}, {b}]"
            )));
        }
        let start = self.atoms.partition_point(|at| at.value() < a);
        let mut acc = CompensatedSum::new();
        for at in &self.atoms[start..] {
            if at.value() > b {
                break;
            }
            acc.add(at.prob);
        }
        Ok(acc.value())
    }
}

/// One convolution step: fold in an independent Bernoulli(`p`) term of
/// value `v > 0`. Both input branches are sorted, so this is a sorted
/// merge; values within [`MERGE_REL_TOL`] (relative) collapse into one
/// atom.
fn convolve_step(atoms: &[Atom], v: f64, p: f64) -> Vec<Atom> {
    let q = 1.0 - p;
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len() * 2);
    let mut i = 0usize; // "kept" branch: value unchanged, prob * q
    let mut j = 0usize; // "shifted" branch: value + v, prob * p
    let key = |hi: f64, lo: f64| (hi, lo);
    while i < atoms.len() || j < atoms.len() {
        let take_kept = if i >= atoms.len() {
            false
        } else if j >= atoms.len() {
            true
        } else {
            let (shi, slo) = atoms[j].shifted(v);
            key(atoms[i].hi, atoms[i].lo) <= key(shi, slo)
        };
        let cand = if take_kept {
            let a = atoms[i];
            i += 1;
            Atom {
                hi: a.hi,
                lo: a.lo,
                prob: a.prob * q,
            }
        } else {
            let a = atoms[j];
            j += 1;
            let (hi, lo) = a.shifted(v);
            Atom {
                hi,
                lo,
                prob: a.prob * p,
            }
        };
        match out.last_mut() {
            Some(last) => {
                let diff = (cand.hi - last.hi) + (cand.lo - last.lo);
                let scale = 1.0_f64.max(cand.hi.abs());
                if diff.abs() <= MERGE_REL_TOL * scale {
                    last.prob += cand.prob;
                } else {
                    out.push(cand);
                }
            }
            None => out.push(cand),
        }
    }
    out
}

/// Trial-division primality for the tiny indices the enumeration cap
/// allows; avoids pulling the sieve machinery into this module.
fn is_small_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_term_reference_distribution() {
        // s = 1, beta = 1, N = 3: forced term 1, random terms 1/2 and 1/3.
        let params = SeriesParams::new(1.0, 1.0).unwrap();
        let d = AtomicDistribution::enumerate(&params, 3).unwrap();
        let atoms: Vec<(f64, f64)> = d.atoms().collect();
        let want = [
            (1.0, 1.0 / 3.0),
            (4.0 / 3.0, 1.0 / 6.0),
            (1.5, 1.0 / 3.0),
            (11.0 / 6.0, 1.0 / 6.0),
        ];
        assert_eq!(atoms.len(), want.len());
        for ((v, p), (wv, wp)) in atoms.iter().zip(want.iter()) {
            assert!((v - wv).abs() <= 1e-15, "value {v} vs {wv}");
            assert!((p - wp).abs() <= 1e-15, "prob {p} vs {wp}");
        }
    }

    #[test]
    fn exact_ties_merge_into_single_atoms() {
        // s = 1, N = 6: the subsets {2} and {3,6} both sum to 1/2, as do
        // their unions with {4}, {5}, {4,5}. 2^5 = 32 raw values collapse
        // to 28 atoms; the mass at 1.5 is 1/6 + 1/60 = 11/60.
        let params = SeriesParams::new(1.0, 1.0).unwrap();
        let d = AtomicDistribution::enumerate(&params, 6).unwrap();
        assert_eq!(d.len(), 28);
        let at_half = d.interval_prob(1.5, 1.5).unwrap();
        assert!(
            (at_half - 11.0 / 60.0).abs() <= 1e-13,
            "mass at 1.5: {at_half} vs {}",
            11.0 / 60.0
        );
    }

    #[test]
    fn total_mass_is_one() {
        for (s, beta, n) in [(1.0, 1.0, 20), (0.6, 1.0, 15), (2.2, 0.5, 18), (1.4, 0.75, 12)] {
            let params = SeriesParams::new(s, beta).unwrap();
            let d = AtomicDistribution::enumerate(&params, n).unwrap();
            assert!(
                (d.total_mass() - 1.0).abs() <= 1e-13,
                "mass {} for s={s}, beta={beta}, N={n}",
                d.total_mass()
            );
        }
    }

    #[test]
    fn moments_match_independent_bernoulli_formulas() {
        // E S = sum p v; Var S = sum p (1-p) v^2 — an algebraically
        // independent route that never enumerates subsets.
        let params = SeriesParams::new(1.3, 0.8).unwrap();
        let n = 16u64;
        let d = AtomicDistribution::enumerate(&params, n).unwrap();
        let mut mean = 0.0;
        let mut var = 0.0;
        for k in 1..=n {
            let (v, p) = (params.term_value(k), params.term_probability(k));
            mean += p * v;
            var += p * (1.0 - p) * v * v;
        }
        assert!((d.exact_moment(1) - mean).abs() <= 1e-13);
        let second = var + mean * mean;
        assert!((d.exact_moment(2) - second).abs() <= 1e-13);
        assert!((d.exact_moment(0) - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn charfn_sum_equals_product_identity() {
        // For independent terms, E exp(-2 pi i t S) factorizes:
        // prod_n (1 - p_n + p_n exp(-2 pi i t v_n)). The enumeration sums
        // 2^m subset contributions instead; the two must agree.
        let params = SeriesParams::new(1.0, 1.0).unwrap();
        let d = AtomicDistribution::enumerate(&params, 10).unwrap();
        for &t in &[0.1, 1.0, 7.5, 100.0, 1000.0] {
            let mut prod = Complex64::new(1.0, 0.0);
            for n in 1..=10u64 {
                let p = params.term_probability(n);
                let theta = -2.0 * std::f64::consts::PI * (t * params.term_value(n)).fract();
                prod *= Complex64::new(1.0 - p + p * theta.cos(), p * theta.sin());
            }
            let sum = d.exact_charfn(t);
            assert!(
                (sum - prod).norm() <= 1e-12,
                "t={t}: sum {sum} vs product {prod}"
            );
        }
    }

    #[test]
    fn charfn_at_zero_is_one() {
        let params = SeriesParams::new(0.6, 1.0).unwrap();
        let d = AtomicDistribution::enumerate(&params, 12).unwrap();
        let z = d.exact_charfn(0.0);
        assert!((z - Complex64::new(1.0, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn interval_prob_partitions() {
        let params = SeriesParams::new(2.0, 1.0).unwrap();
        let d = AtomicDistribution::enumerate(&params, 14).unwrap();
        let whole = d.interval_prob(0.0, 3.0).unwrap();
        assert!((whole - 1.0).abs() <= 1e-13);
        // P(S = 1): no random hits at all
        let mut none = 1.0;
        for n in 2..=14u64 {
            none *= 1.0 - 1.0 / n as f64;
        }
        let at_one = d.interval_prob(1.0, 1.0).unwrap();
        assert!((at_one - none).abs() <= 1e-13, "{at_one} vs {none}");
    }

    #[test]
    fn prime_variant_enumerates_only_primes() {
        let params = SeriesParams::with_variant(1.0, 1.0, SeriesVariant::PrimesOnly).unwrap();
        let d = AtomicDistribution::enumerate(&params, 10).unwrap();
        // primes 2, 3, 5, 7 -> 2^4 = 16 subset sums, all distinct here
        assert_eq!(d.len(), 16);
        // smallest atom: empty set, value 0, prob prod (1 - 1/p)
        let (v0, p0) = d.atoms().next().unwrap();
        assert_eq!(v0, 0.0);
        let want: f64 = [2u64, 3, 5, 7]
            .iter()
            .map(|&p| 1.0 - 1.0 / p as f64)
            .product();
        assert!((p0 - want).abs() <= 1e-15);
    }

    #[test]
    fn log_product_variant_matches_product_form() {
        // S = -ln prod (1 - I_n/n): the atom for "records at 2 and 4" must
        // equal -(ln(1/2) + ln(3/4)).
        let params = SeriesParams::log_product();
        let d = AtomicDistribution::enumerate(&params, 4).unwrap();
        let target = -((1.0_f64 - 0.5).ln() + (1.0_f64 - 0.25).ln());
        let hit = d
            .atoms()
            .find(|(v, _)| (v - target).abs() <= 1e-14)
            .expect("atom for hits {2,4} exists");
        // P(I_2=1, I_3=0, I_4=1) = (1/2)(2/3)(1/4)
        assert!((hit.1 - (0.5 * (2.0 / 3.0) * 0.25)).abs() <= 1e-15);
    }

    #[test]
    fn caps_and_domain_errors() {
        let params = SeriesParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            AtomicDistribution::enumerate(&params, 26),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            AtomicDistribution::enumerate(&params, 0),
            Err(Error::Domain(_))
        ));
        let d = AtomicDistribution::enumerate(&params, 5).unwrap();
        assert!(matches!(d.interval_prob(2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            d.interval_prob(f64::NAN, 1.0),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn prop_mass_one_and_sorted(
            s in 0.4_f64..3.0,
            beta in 0.3_f64..1.2,
            n in 2u64..13,
        ) {
            let params = SeriesParams::new(s, beta).unwrap();
            let d = AtomicDistribution::enumerate(&params, n).unwrap();
            prop_assert!((d.total_mass() - 1.0).abs() <= 1e-12);
            let vals: Vec<f64> = d.atoms().map(|(v, _)| v).collect();
            for w in vals.windows(2) {
                prop_assert!(w[0] < w[1], "atoms must be strictly sorted");
            }
            for (_, p) in d.atoms() {
                prop_assert!(p > 0.0);
            }
        }

        #[test]
        fn prop_charfn_modulus_bounded(
            s in 0.4_f64..3.0,
            t in 0.0_f64..500.0,
        ) {
            let params = SeriesParams::new(s, 1.0).unwrap();
            let d = AtomicDistribution::enumerate(&params, 10).unwrap();
            prop_assert!(d.exact_charfn(t).norm() <= 1.0 + 1e-12);
        }
    }
}

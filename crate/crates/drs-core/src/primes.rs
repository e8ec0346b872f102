//! Prime machinery: a segmented sieve with Möbius values, Mertens partial
//! products, the singularity experiment for the prime-indexed series, and
//! the generalized coefficient criterion.
//!
//! # The singularity experiment
//!
//! For `S = sum_p I_p p^-s` with `I_p ~ Bernoulli(1/p)` over primes, the
//! law concentrates on a small set: around each head value
//! `x_m = sum_{p | m} p^-s` (`m` square-free below `N^epsilon`) place an
//! interval of width `2C / N^s`, where `C` normalizes the mean of the
//! prime tail beyond `N` — by Markov the tail stays inside the width with
//! probability at least 1/2. The union `B_N` has Lebesgue measure at most
//! `2C N^(epsilon - s)` (it shrinks as `N` grows), yet the sampled series
//! keeps landing in it with probability bounded away from zero: mass
//! concentrates on a set of vanishing measure, the signature of a
//! singular law. [`singularity_experiment`] runs exactly this comparison.
//!
//! # The generalized criterion
//!
//! For coefficients `a_p` on primes, singularity-type behaviour rests on
//! three numerical hypotheses, checked by [`general_ap_check`]:
//! (i) `sum_{a_p != 0} 1/p` diverges, (ii) `sum |a_p|/p` converges,
//! (iii) the tail `sum_{p > x} |a_p|/p` obeys a power bound `K x^-c`.
//! Divergence/convergence are judged from per-decade increments over the
//! sieved range — see the thresholds on the report type.

use crate::error::{Error, Result};
use crate::numerics::{fit_slope, CompensatedSum, RngStream};
use crate::sampler::{sample_batch, SeriesSampler};
use crate::series::{neg_power, SeriesParams, SeriesVariant};
use serde::Serialize;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Hard cap on the sieve limit (1e9; the Möbius byte array alone is 1 GB
/// there).
const SIEVE_LIMIT_CAP: u64 = 1_000_000_000;

/// Sieve segment length.
const SEGMENT_LEN: u64 = 1 << 20;

/// Histogram bin width for the atom probe of the singularity experiment.
const ATOM_BIN_WIDTH: f64 = 1e-9;

// ============================================================================
// Sieve
// ============================================================================

/// Primes and Möbius values up to a limit.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    mobius: Vec<i8>,
}

/// Builds the table by a segmented sieve: per segment, base primes mark
/// compositeness (for primality), flip the Möbius sign (one flip per
/// prime divisor), and zero out multiples of their squares; a residual
/// factor `> 1` left after all base-prime divisions is a single prime
/// factor above `sqrt(limit)` and contributes the final sign flip.
///
/// # Errors
///
/// - `Error::Domain` if `limit < 2`.
/// - `Error::Capacity` if `limit` exceeds 1e9.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::Domain(format!("sieve limit must be >= 2, got {limit}")));
    }
    if limit > SIEVE_LIMIT_CAP {
        return Err(Error::Capacity(format!(
            "sieve limit {limit} exceeds cap {SIEVE_LIMIT_CAP}"
        )));
    }
    let root = limit.isqrt();
    // base sieve over [2, sqrt(limit)]
    let mut base_composite = vec![false; (root + 1) as usize];
    let mut base_primes: Vec<u64> = Vec::new();
    for p in 2..=root {
        if !base_composite[p as usize] {
            base_primes.push(p);
            let mut m = p * p;
            while m <= root {
                base_composite[m as usize] = true;
                m += p;
            }
        }
    }

    let mut primes: Vec<u64> = Vec::new();
    let mut mobius = vec![0i8; (limit + 1) as usize];
    mobius[1] = 1;

    let mut seg_lo = 2u64;
    let mut composite = vec![false; SEGMENT_LEN as usize];
    let mut mob = vec![1i8; SEGMENT_LEN as usize];
    let mut rem = vec![0u32; SEGMENT_LEN as usize];
    while seg_lo <= limit {
        let seg_hi = (seg_lo + SEGMENT_LEN - 1).min(limit);
        let len = (seg_hi - seg_lo + 1) as usize;
        for (i, slot) in rem[..len].iter_mut().enumerate() {
            *slot = (seg_lo + i as u64) as u32;
        }
        composite[..len].fill(false);
        mob[..len].fill(1);
        for &p in &base_primes {
            if p * p > seg_hi {
                break;
            }
            // one sign flip and one division per multiple of p
            let mut m = seg_lo.div_ceil(p) * p;
            while m <= seg_hi {
                let i = (m - seg_lo) as usize;
                mob[i] = -mob[i];
                rem[i] /= p as u32;
                m += p;
            }
            // compositeness from p^2 up (smaller multiples have a smaller factor)
            let mut m = (p * p).max(seg_lo.div_ceil(p) * p);
            while m <= seg_hi {
                composite[(m - seg_lo) as usize] = true;
                m += p;
            }
            // squared factor kills the Möbius value
            let sq = p * p;
            let mut m = seg_lo.div_ceil(sq) * sq;
            while m <= seg_hi {
                mob[(m - seg_lo) as usize] = 0;
                m += sq;
            }
        }
        for i in 0..len {
            let n = seg_lo + i as u64;
            if rem[i] > 1 {
                // exactly one prime factor above sqrt(limit) remains
                mob[i] = -mob[i];
            }
            mobius[n as usize] = mob[i];
            if !composite[i] {
                primes.push(n);
            }
        }
        seg_lo = seg_hi + 1;
    }
    Ok(PrimeTable {
        limit,
        primes,
        mobius,
    })
}

impl PrimeTable {
    /// Sieve limit.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes up to the limit.
    pub fn prime_count(&self) -> usize {
        self.primes.len()
    }

    /// Primality by binary search.
    pub fn is_prime(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }

    /// Möbius value of `m`.
    ///
    /// # Panics
    ///
    /// If `m` is 0 or beyond the limit.
    pub fn mobius(&self, m: u64) -> i8 {
        assert!(m >= 1 && m <= self.limit, "mobius({m}) outside [1, {}]", self.limit);
        self.mobius[m as usize]
    }

    /// Distinct prime divisors of `m <= limit`, ascending (trial division
    /// over the table's primes).
    fn prime_divisors(&self, mut m: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for &p in &self.primes {
            if p * p > m {
                break;
            }
            if m % p == 0 {
                out.push(p);
                while m % p == 0 {
                    m /= p;
                }
            }
        }
        if m > 1 {
            out.push(m);
        }
        out
    }
}

/// Fraction of square-free integers in `[1, x]` (those with nonzero
/// Möbius value); tends to `6/pi^2 = 0.6079...`.
///
/// # Errors
///
/// `Error::Domain` if `x < 1` or `x` exceeds the table limit.
pub fn squarefree_density(pt: &PrimeTable, x: u64) -> Result<f64> {
    if x < 1 || x > pt.limit {
        return Err(Error::Domain(format!(
            "x must lie in [1, {}], got {x}",
            pt.limit
        )));
    }
    let count = pt.mobius[1..=(x as usize)]
        .iter()
        .filter(|&&m| m != 0)
        .count();
    Ok(count as f64 / x as f64)
}

// ============================================================================
// Mertens
// ============================================================================

/// The normalized Mertens product
/// `prod_{p < x} (1 - 1/p) * e^gamma * ln x`, which tends to 1 at rate
/// `O(1/ln x)`; computed in log space.
///
/// # Errors
///
/// `Error::Domain` if `x < 3` or `x` exceeds the table limit.
pub fn mertens_ratio(pt: &PrimeTable, x: u64) -> Result<f64> {
    if x < 3 {
        return Err(Error::Domain(format!("Mertens ratio needs x >= 3, got {x}")));
    }
    if x > pt.limit {
        return Err(Error::Domain(format!(
            "x = {x} beyond the sieve limit {}",
            pt.limit
        )));
    }
    let mut acc = CompensatedSum::new();
    for &p in &pt.primes {
        if p >= x {
            break;
        }
        acc.add((-1.0 / p as f64).ln_1p());
    }
    Ok((acc.value() + EULER_GAMMA + (x as f64).ln().ln()).exp())
}

// ============================================================================
// The set B_N
// ============================================================================

/// A finite union of disjoint closed intervals on the line, sorted.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalUnion {
    /// Disjoint closed intervals `[lo, hi]`, ascending by `lo`.
    pub intervals: Vec<(f64, f64)>,
    /// Total Lebesgue measure.
    pub measure: f64,
    /// Intervals before merging (one per square-free head value).
    pub raw_count: u64,
}

impl IntervalUnion {
    /// Whether `x` lies in the union.
    pub fn contains(&self, x: f64) -> bool {
        // last interval with lo <= x, if any
        let idx = self.intervals.partition_point(|&(lo, _)| lo <= x);
        idx > 0 && x <= self.intervals[idx - 1].1
    }
}

/// Merges possibly-overlapping closed intervals into a disjoint sorted
/// union; the measure is the compensated sum of merged lengths.
fn merge_intervals(mut raw: Vec<(f64, f64)>) -> IntervalUnion {
    let raw_count = raw.len() as u64;
    raw.sort_by(|a, b| a.partial_cmp(b).expect("finite interval endpoints"));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for (lo, hi) in raw {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let mut measure = CompensatedSum::new();
    for &(lo, hi) in &merged {
        measure.add(hi - lo);
    }
    IntervalUnion {
        intervals: merged,
        measure: measure.value(),
        raw_count,
    }
}

/// Builds `B_N`: for every square-free `m < N^epsilon` (including
/// `m = 1`, whose head value is 0) the interval
/// `[x_m, x_m + 2C/N^s]` with `x_m = sum_{p | m} p^-s`, merged into a
/// disjoint union.
///
/// Head values accumulate in ascending prime order with plain summation —
/// bit-for-bit the order and arithmetic of the series sampler, so a
/// sampled head equal to a grid point is recognized exactly.
///
/// # Errors
///
/// `Error::Domain` unless `0 < epsilon < s`, `N >= 2`, `C > 0`, and
/// `N^epsilon` is within the table limit.
pub fn build_b_n(pt: &PrimeTable, n_scale: u64, epsilon: f64, s: f64, c: f64) -> Result<IntervalUnion> {
    if !(epsilon > 0.0) || !(epsilon < s) {
        return Err(Error::Domain(format!(
            "need 0 < epsilon < s, got epsilon = {epsilon}, s = {s}"
        )));
    }
    if n_scale < 2 {
        return Err(Error::Domain(format!("scale N must be >= 2, got {n_scale}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("width constant must be > 0, got {c}")));
    }
    let head_edge = (n_scale as f64).powf(epsilon);
    if head_edge > pt.limit as f64 {
        return Err(Error::Domain(format!(
            "N^epsilon = {head_edge} beyond the sieve limit {}",
            pt.limit
        )));
    }
    let m_max = (head_edge.ceil() as u64).saturating_sub(1).max(1);
    let width = 2.0 * c * neg_power(n_scale, s);
    let mut raw = Vec::new();
    for m in 1..=m_max {
        if (m as f64) >= head_edge || pt.mobius(m) == 0 {
            continue;
        }
        let mut x = 0.0_f64;
        for p in pt.prime_divisors(m) {
            x += neg_power(p, s);
        }
        raw.push((x, x + width));
    }
    Ok(merge_intervals(raw))
}

// ============================================================================
// Singularity experiment
// ============================================================================

/// Outcome of the measure-vs-mass comparison for the prime series.
#[derive(Debug, Clone, Serialize)]
pub struct SingularityReport {
    /// Scale `N`.
    pub n_scale: u64,
    /// Head exponent `epsilon`.
    pub epsilon: f64,
    /// Series exponent `s`.
    pub s: f64,
    /// Width constant `C` (the prime-tail mean beyond `N`, scaled by `N^s`).
    pub c_constant: f64,
    /// Lebesgue measure of `B_N`.
    pub b_measure: f64,
    /// Disjoint intervals in `B_N` after merging.
    pub interval_count: u64,
    /// Truncation level of the sampled series (all primes up to here).
    pub truncation: u64,
    /// Monte Carlo trials.
    pub trials: u64,
    /// Trials that landed in `B_N`.
    pub hits: u64,
    /// `P(S in B_N)` estimate.
    pub mc_prob: f64,
    /// Binomial standard error of `mc_prob`.
    pub stderr: f64,
    /// Largest fraction of samples sharing one bin of width 1e-9 — an
    /// upper probe for atoms (a genuine atom would concentrate a bin).
    pub max_bin_mass: f64,
}

/// Upper bound on the prime tail `sum_{p > m} p^-a` beyond the sieve
/// limit, via the Chebyshev-type bound `pi(x) < 1.3 x / ln x` (valid for
/// x >= 17) and partial summation.
fn prime_tail_beyond(m: u64, a: f64) -> f64 {
    debug_assert!(a > 1.0 && m >= 17);
    let mf = m as f64;
    1.3 * a / mf.ln() * neg_power(m, a - 1.0) / (a - 1.0)
}

/// Runs the singularity experiment at scale `N`: builds `B_N` with the
/// self-consistent width constant, samples the prime series truncated at
/// `M = max(2^20, 128 N)` (the discarded tail mean is well under 2% of
/// the interval width), and estimates `P(S in B_N)`.
///
/// The width constant is `C = N^s * E[tail beyond N]`, where the tail
/// mean `sum_{p > N} p^-(s+1)` is summed exactly over the sieve and
/// bounded beyond it; with this choice the Markov step of the
/// construction holds with probability at least 1/2.
///
/// Trials run chunked on sibling substreams: reproducible and
/// thread-count invariant.
///
/// # Errors
///
/// - `Error::Domain` unless `0 < epsilon < s`, `N >= 2`, `trials >= 1`.
/// - `Error::Capacity` if the implied sieve exceeds the sieve cap.
pub fn singularity_experiment(
    s: f64,
    epsilon: f64,
    n_scale: u64,
    trials: u64,
    rng: &RngStream,
) -> Result<SingularityReport> {
    if !(epsilon > 0.0) || !(epsilon < s) {
        return Err(Error::Domain(format!(
            "need 0 < epsilon < s, got epsilon = {epsilon}, s = {s}"
        )));
    }
    if n_scale < 2 {
        return Err(Error::Domain(format!("scale N must be >= 2, got {n_scale}")));
    }
    if trials < 1 {
        return Err(Error::Domain("trials must be >= 1".to_string()));
    }
    let truncation = (128 * n_scale).max(1 << 20);
    let pt = sieve(truncation)?;

    // width constant: N^s times the tail mean beyond N
    let a = s + 1.0;
    let mut tail_mean = CompensatedSum::new();
    for &p in pt.primes.iter().skip_while(|&&p| p <= n_scale) {
        tail_mean.add(neg_power(p, a));
    }
    let tail = tail_mean.value() + prime_tail_beyond(truncation, a);
    let c_constant = (n_scale as f64).powf(s) * tail;

    let b_set = build_b_n(&pt, n_scale, epsilon, s, c_constant)?;

    let params = SeriesParams::with_variant(s, 1.0, SeriesVariant::PrimesOnly)?;
    let sampler = SeriesSampler::from_indices(&params, pt.primes.clone())?;
    let values = sample_batch(&sampler, trials as usize, rng);

    let hits = values.iter().filter(|&&v| b_set.contains(v)).count() as u64;
    let mc_prob = hits as f64 / trials as f64;
    let stderr = (mc_prob * (1.0 - mc_prob) / trials as f64).sqrt();

    // atom probe: largest fraction of samples in one fixed-width bin
    let mut bins: Vec<i64> = values
        .iter()
        .map(|&v| (v / ATOM_BIN_WIDTH).floor() as i64)
        .collect();
    bins.sort_unstable();
    let mut max_run = 0usize;
    let mut run = 0usize;
    let mut prev: Option<i64> = None;
    for b in bins {
        if Some(b) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(b);
        }
        max_run = max_run.max(run);
    }

    Ok(SingularityReport {
        n_scale,
        epsilon,
        s,
        c_constant,
        b_measure: b_set.measure,
        interval_count: b_set.intervals.len() as u64,
        truncation,
        trials,
        hits,
        mc_prob,
        stderr,
        max_bin_mass: max_run as f64 / trials as f64,
    })
}

// ============================================================================
// Generalized coefficient criterion
// ============================================================================

/// Per-decade statistics of the coefficient sums.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecadeStat {
    /// Decade index `k` (covering primes in `(10^k, 10^(k+1)]`).
    pub k: u32,
    /// Cumulative `sum_{a_p != 0} 1/p` through this decade.
    pub divergence_partial: f64,
    /// Increment of `sum_{a_p != 0} 1/p` within this decade.
    pub divergence_increment: f64,
    /// Increment of `sum |a_p|/p` within this decade.
    pub abs_increment: f64,
}

/// Verdicts on the three hypotheses of the generalized criterion.
///
/// Thresholds (frozen after calibration against the four reference
/// families `a_p = 1/p`, `a_p = 0`, `a_p = 1`, `a_p = 1/ln p`):
///
/// - **(i) divergence**: cumulative `sum_{a_p != 0} 1/p >= 2.0` and still
///   growing in the last decade. (All-prime support reaches ~3.0 by 1e8;
///   the empty family stalls at 0.)
/// - **(ii) convergence**: decade increments `r_k` of `sum |a_p|/p` fall
///   with log-log slope `<= -1.5` in the decade index. (`1/p` terms give
///   slopes below -8; the divergent `a_p = 1` family decays like `1/k`,
///   slope -1.)
/// - **(iii) power tail**: (ii) holds and the fitted exponent of
///   `r_k ~ K 10^(-ck)` satisfies `c >= 0.25`. (`a_p = p^-1` fits
///   `c ~ 1`; `a_p = 1/ln p` has tail `1/ln x` — not a power — and fits
///   `c ~ 0.1`.)
#[derive(Debug, Clone, Serialize)]
pub struct ApCheckReport {
    /// Sieve range the coefficients were examined on.
    pub limit: u64,
    /// Per-decade sums.
    pub decades: Vec<DecadeStat>,
    /// Final cumulative `sum_{a_p != 0} 1/p`.
    pub divergence_total: f64,
    /// Log-log slope of the absolute increments against the decade index.
    pub convergence_slope: f64,
    /// Fitted tail exponent `c` (slope of `ln r_k` against `ln 10^k`,
    /// negated).
    pub tail_exponent: f64,
    /// Hypothesis (i): the support sum diverges.
    pub divergence_pass: bool,
    /// Hypothesis (ii): the absolute sum converges.
    pub convergence_pass: bool,
    /// Hypothesis (iii): power-law tail bound.
    pub tail_pass: bool,
}

/// Minimum cumulative support sum for hypothesis (i).
const DIVERGENCE_MIN: f64 = 2.0;
/// Maximum log-log slope of decade increments for hypothesis (ii).
const CONVERGENCE_SLOPE_MAX: f64 = -1.5;
/// Minimum fitted tail exponent for hypothesis (iii).
const TAIL_EXPONENT_MIN: f64 = 0.25;

/// Checks the three hypotheses of the generalized criterion for
/// coefficients `a(p)` given on all primes of the table.
///
/// # Errors
///
/// - `Error::Domain` if the table spans fewer than four decades (no
///   meaningful tail fit below 1e4) or a coefficient is not finite.
pub fn general_ap_check(pt: &PrimeTable, a: impl Fn(u64) -> f64) -> Result<ApCheckReport> {
    if pt.limit < 10_000 {
        return Err(Error::Domain(format!(
            "coefficient check needs a sieve limit of at least 1e4, got {}",
            pt.limit
        )));
    }
    let k_max = {
        let mut k = 0u32;
        while 10u64.pow(k + 2) <= pt.limit {
            k += 1;
        }
        k
    };
    // decade k covers (10^k, 10^(k+1)]; primes below 10 accumulate into
    // the cumulative sums but belong to no fitted decade
    let mut div_cum = CompensatedSum::new();
    let mut div_inc = vec![0.0f64; (k_max + 1) as usize];
    let mut abs_inc = vec![0.0f64; (k_max + 1) as usize];
    let mut div_partial = vec![0.0f64; (k_max + 1) as usize];
    for &p in &pt.primes {
        let ap = a(p);
        if !ap.is_finite() {
            return Err(Error::Domain(format!("coefficient at p = {p} is not finite")));
        }
        let inv_p = 1.0 / p as f64;
        if ap != 0.0 {
            div_cum.add(inv_p);
        }
        if p > 10 {
            let k = (p as f64).log10().floor() as u32;
            if k <= k_max {
                if ap != 0.0 {
                    div_inc[k as usize] += inv_p;
                }
                abs_inc[k as usize] += ap.abs() * inv_p;
            }
        }
        if p <= 10u64.pow(k_max + 1) {
            let k = if p <= 10 {
                1
            } else {
                (p as f64).log10().floor() as u32
            };
            if k <= k_max {
                div_partial[k as usize] = div_cum.value();
            }
        }
    }
    // carry cumulative values through empty decades
    for k in 2..=(k_max as usize) {
        if div_partial[k] == 0.0 {
            div_partial[k] = div_partial[k - 1];
        }
    }
    let decades: Vec<DecadeStat> = (1..=k_max)
        .map(|k| DecadeStat {
            k,
            divergence_partial: div_partial[k as usize],
            divergence_increment: div_inc[k as usize],
            abs_increment: abs_inc[k as usize],
        })
        .collect();
    let divergence_total = div_cum.value();

    // fits over decades k >= 2 with nonzero increments
    let fit_pts: Vec<(f64, f64)> = decades
        .iter()
        .filter(|d| d.k >= 2 && d.abs_increment > 0.0)
        .map(|d| (d.k as f64, d.abs_increment.ln()))
        .collect();
    let (convergence_slope, tail_exponent, convergence_pass, tail_pass) = if fit_pts.is_empty() {
        // identically-zero tail: both sums trivially converge
        (f64::NEG_INFINITY, f64::INFINITY, true, true)
    } else if fit_pts.len() < 3 {
        return Err(Error::Domain(
            "too few nonzero decades for a tail fit; raise the sieve limit".to_string(),
        ));
    } else {
        let loglog: Vec<(f64, f64)> = fit_pts.iter().map(|&(k, y)| (k.ln(), y)).collect();
        let slope_kk = fit_slope(&loglog)?.slope;
        let logx: Vec<(f64, f64)> = fit_pts
            .iter()
            .map(|&(k, y)| (k * std::f64::consts::LN_10, y))
            .collect();
        let c_fit = -fit_slope(&logx)?.slope;
        let conv = slope_kk <= CONVERGENCE_SLOPE_MAX;
        (slope_kk, c_fit, conv, conv && c_fit >= TAIL_EXPONENT_MIN)
    };
    let last_growing = decades
        .last()
        .map(|d| d.divergence_increment > 0.0)
        .unwrap_or(false);
    let divergence_pass = divergence_total >= DIVERGENCE_MIN && last_growing;

    Ok(ApCheckReport {
        limit: pt.limit,
        decades,
        divergence_total,
        convergence_slope,
        tail_exponent,
        divergence_pass,
        convergence_pass,
        tail_pass,
    })
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn small_table() -> PrimeTable {
        sieve(10_000).unwrap()
    }

    #[test]
    fn sieve_trivia() {
        let pt = sieve(10).unwrap();
        assert_eq!(pt.primes(), &[2, 3, 5, 7]);
        assert_eq!(pt.mobius(1), 1);
        assert_eq!(pt.mobius(6), 1);
        assert_eq!(pt.mobius(4), 0);
        assert_eq!(pt.mobius(2), -1);
        assert!(sieve(1).is_err());
        assert!(sieve(2_000_000_000).is_err());
    }

    #[test]
    fn sieve_against_trial_division() {
        let pt = small_table();
        let trial_is_prime = |n: u64| -> bool {
            if n < 2 {
                return false;
            }
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    return false;
                }
                d += 1;
            }
            true
        };
        for n in 2..=10_000u64 {
            assert_eq!(pt.is_prime(n), trial_is_prime(n), "primality mismatch at {n}");
        }
        assert_eq!(pt.prime_count(), 1229);
    }

    #[test]
    fn prime_count_at_one_million() {
        let pt = sieve(1_000_000).unwrap();
        assert_eq!(pt.prime_count(), 78_498);
        // spot-check segmented boundaries
        assert!(pt.is_prime(999_983));
        assert!(!pt.is_prime(999_981));
    }

    #[test]
    fn mobius_is_multiplicative_on_coprime_pairs() {
        let pt = small_table();
        for m in 1..=1000u64 {
            for n in 1..=1000u64 {
                if gcd(m, n) == 1 && m * n <= 10_000 {
                    assert_eq!(
                        pt.mobius(m * n),
                        pt.mobius(m) * pt.mobius(n),
                        "multiplicativity fails at ({m}, {n})"
                    );
                }
            }
        }
    }

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn mobius_divisor_sums_collapse() {
        // sum_{d | n} mu(d) = [n = 1]
        let pt = small_table();
        for n in 1..=10_000u64 {
            let mut sum = 0i64;
            let mut d = 1;
            while d * d <= n {
                if n % d == 0 {
                    sum += pt.mobius(d) as i64;
                    if d != n / d {
                        sum += pt.mobius(n / d) as i64;
                    }
                }
                d += 1;
            }
            assert_eq!(sum, i64::from(n == 1), "divisor sum at n = {n}");
        }
    }

    #[test]
    fn squarefree_density_tends_to_six_over_pi_squared() {
        let pt = sieve(1_000_000).unwrap();
        let d = squarefree_density(&pt, 1_000_000).unwrap();
        let want = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((d - want).abs() <= 1e-3, "density {d} vs {want}");
    }

    #[test]
    fn mertens_ratio_reference_points() {
        let pt = sieve(1_000_000).unwrap();
        // x = 3: single factor (1 - 1/2)
        let r3 = mertens_ratio(&pt, 3).unwrap();
        let want = 0.5 * EULER_GAMMA.exp() * 3.0f64.ln();
        assert!((r3 - want).abs() <= 1e-12);
        assert!((r3 - 0.978).abs() <= 5e-4);
        let r6 = mertens_ratio(&pt, 1_000_000).unwrap();
        assert!((r6 - 1.0).abs() <= 0.05, "ratio at 1e6: {r6}");
        // strictly improving over the decades available here
        let mut prev = (mertens_ratio(&pt, 1_000).unwrap() - 1.0).abs();
        for x in [10_000u64, 100_000, 1_000_000] {
            let cur = (mertens_ratio(&pt, x).unwrap() - 1.0).abs();
            assert!(cur < prev, "no improvement at x = {x}");
            prev = cur;
        }
        assert!(mertens_ratio(&pt, 2).is_err());
    }

    #[test]
    fn b_n_single_interval_when_head_is_trivial() {
        // N^eps < 2: only m = 1 contributes: [0, 2C/N^s]
        let pt = small_table();
        let b = build_b_n(&pt, 16, 0.2, 1.0, 0.5).unwrap();
        assert_eq!(b.intervals.len(), 1);
        assert_eq!(b.intervals[0].0, 0.0);
        let want = 2.0 * 0.5 / 16.0;
        assert!((b.measure - want).abs() <= 1e-15);
    }

    #[test]
    fn b_n_measure_bounded_by_count_times_width() {
        let pt = small_table();
        let (n, eps, s, c) = (10_000u64, 0.5, 1.0, 0.1);
        let b = build_b_n(&pt, n, eps, s, c).unwrap();
        // raw_count <= number of square-free m < 100
        assert!(b.raw_count <= 100);
        let bound = 2.0 * c * (n as f64).powf(eps - s) * b.raw_count as f64;
        assert!(b.measure <= bound * (1.0 + 1e-12), "{} > {bound}", b.measure);
        // merging is idempotent
        let remerged = merge_intervals(b.intervals.clone());
        assert_eq!(remerged.intervals, b.intervals);
        assert_eq!(remerged.measure, b.measure);
    }

    #[test]
    fn b_n_membership_agrees_with_linear_scan() {
        let pt = small_table();
        let b = build_b_n(&pt, 1000, 0.5, 1.0, 0.05).unwrap();
        for i in 0..400 {
            let x = i as f64 * 0.004;
            let linear = b.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi);
            assert_eq!(b.contains(x), linear, "membership mismatch at {x}");
        }
    }

    #[test]
    fn b_n_measure_decreases_in_scale() {
        let pt = sieve(1 << 20).unwrap();
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let b = build_b_n(&pt, n, 0.5, 1.0, 0.08).unwrap();
            assert!(
                b.measure < prev,
                "measure did not shrink at N = {n}: {} vs {prev}",
                b.measure
            );
            prev = b.measure;
        }
    }

    #[test]
    fn b_n_rejects_bad_arguments() {
        let pt = small_table();
        assert!(build_b_n(&pt, 100, 0.0, 1.0, 0.1).is_err());
        assert!(build_b_n(&pt, 100, 1.5, 1.0, 0.1).is_err());
        assert!(build_b_n(&pt, 1, 0.5, 1.0, 0.1).is_err());
        assert!(build_b_n(&pt, 100, 0.5, 1.0, 0.0).is_err());
        // N^eps beyond the table
        assert!(build_b_n(&pt, 10_000u64.pow(3), 0.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn singularity_experiment_small_scale() {
        let rng = RngStream::new(1105, 2);
        let rep = singularity_experiment(1.0, 0.5, 10_000, 50_000, &rng).unwrap();
        assert_eq!(rep.truncation, 1_280_000);
        assert!(rep.mc_prob > 0.0 && rep.mc_prob <= 1.0);
        assert!(rep.stderr > 0.0);
        // documented invariant: measure <= 2 C N^(eps - s)
        let bound = 2.0 * rep.c_constant * (rep.n_scale as f64).powf(rep.epsilon - rep.s);
        assert!(rep.b_measure <= bound * (1.0 + 1e-12));
        assert!(rep.max_bin_mass > 0.0 && rep.max_bin_mass <= 1.0);
        // the head value 0 (no hits below N^eps) keeps mass near zero;
        // probability must be visibly positive
        assert!(rep.mc_prob > 0.02, "mc_prob {} at N=1e4", rep.mc_prob);
    }

    #[test]
    fn singularity_experiment_is_deterministic() {
        let rng = RngStream::new(7, 7);
        let a = singularity_experiment(1.0, 0.5, 1_000, 20_000, &rng).unwrap();
        let b = singularity_experiment(1.0, 0.5, 1_000, 20_000, &rng).unwrap();
        assert_eq!(a.hits, b.hits);
        assert_eq!(a.mc_prob, b.mc_prob);
        assert_eq!(a.b_measure, b.b_measure);
        assert_eq!(a.max_bin_mass, b.max_bin_mass);
        assert!(singularity_experiment(1.0, 1.5, 1000, 10, &rng).is_err());
    }

    #[test]
    fn ap_check_reference_families() {
        let pt = sieve(1_000_000).unwrap();
        // a_p = p^-1: all three hypotheses hold, c fits near 1
        let power = general_ap_check(&pt, |p| 1.0 / p as f64).unwrap();
        assert!(power.divergence_pass, "{power:?}");
        assert!(power.convergence_pass, "{power:?}");
        assert!(power.tail_pass, "{power:?}");
        assert!(
            (power.tail_exponent - 1.0).abs() <= 0.25,
            "tail exponent {} off the 1/p reference",
            power.tail_exponent
        );
        // a_p = 0: support sum never grows
        let zero = general_ap_check(&pt, |_| 0.0).unwrap();
        assert!(!zero.divergence_pass);
        assert!(zero.convergence_pass && zero.tail_pass);
        // a_p = 1: sum |a_p|/p is the harmonic prime sum — divergent
        let ones = general_ap_check(&pt, |_| 1.0).unwrap();
        assert!(ones.divergence_pass);
        assert!(!ones.convergence_pass, "slope {}", ones.convergence_slope);
        // a_p = 1/ln p: converges but with a non-power tail
        let log_inv = general_ap_check(&pt, |p| 1.0 / (p as f64).ln()).unwrap();
        assert!(log_inv.divergence_pass);
        assert!(log_inv.convergence_pass, "slope {}", log_inv.convergence_slope);
        assert!(
            !log_inv.tail_pass,
            "tail exponent {} should miss the power-law gate",
            log_inv.tail_exponent
        );
    }

    #[test]
    fn ap_check_rejects_bad_inputs() {
        let small = sieve(100).unwrap();
        assert!(general_ap_check(&small, |p| 1.0 / p as f64).is_err());
        let pt = small_table();
        assert!(general_ap_check(&pt, |_| f64::NAN).is_err());
    }
}

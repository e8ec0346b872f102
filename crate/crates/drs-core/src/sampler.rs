//! Monte Carlo engines: indicator paths, record processes, and a
//! skip-sampling generator for truncated series values.
//!
//! # Provided operations
//!
//! | Item                      | Purpose                                        |
//! |---------------------------|------------------------------------------------|
//! | [`sample_indicators`]     | one Bernoulli(`n^-beta`) path `I_1..I_N`       |
//! | [`RecordPath`]            | running maxima / record times of i.i.d. uniforms |
//! | [`SeriesSampler`]         | prepared tables for drawing truncated sums     |
//! | [`sample_batch`]          | deterministic parallel batch of draws          |
//! | [`sample_series`]         | convenience: build sampler + draw a batch      |
//! | [`block_single_hit_prob`] | exact P(exactly one hit in a dyadic block)     |
//! | [`BlockConditional`]      | law of the hit position given exactly one hit  |
//!
//! # Skip sampling
//!
//! A truncated sum has `~ln N` active terms out of `N` candidates, so
//! drawing one Bernoulli per index wastes almost every draw. Instead the
//! sampler precomputes the cumulative hazard `H_i = sum_{j<=i} -ln(1-p_j)`
//! and runs a unit-rate Poisson process on the hazard axis: each
//! exponential step lands in some interval `(H_{i-1}, H_i]`, which marks
//! index `i` as hit (duplicates collapse by resuming from `H_i`). This
//! reproduces independent Bernoulli(`p_i`) hits exactly — the probability
//! of no Poisson point in interval `i` is `exp(ln(1-p_i)) = 1 - p_i` — at
//! a cost per sample proportional to the number of hits, not to `N`.
//!
//! # Determinism
//!
//! Batches are split into fixed chunks of 2^16 samples; chunk `c` draws
//! from `rng.substream(c)` and chunks are assembled in index order. The
//! output is therefore a pure function of `(seed, stream_id)` — identical
//! across platforms, thread counts, and repeated runs — and the first `k`
//! values of a batch do not depend on the requested batch size.

use crate::error::{Error, Result};
use crate::numerics::{CompensatedSum, RngStream};
use crate::series::{SeriesParams, SeriesVariant};
use rayon::prelude::*;
use serde::Serialize;

/// Samples per parallel chunk (and substream granularity) in batches.
pub const BATCH_CHUNK: usize = 1 << 16;

/// Hard cap on the number of random indices a sampler may table.
/// Three 8-byte columns per index put this at ~400 MB of tables.
const SAMPLER_INDEX_CAP: u64 = 1 << 24;

// ============================================================================
// Indicator paths
// ============================================================================

/// A realized indicator path `I_first..I_n_max` (dense over the integers).
///
/// Indicators are defined for every integer index regardless of the series
/// variant — the variant only chooses which indices contribute terms to
/// sums built on top of a path.
#[derive(Debug, Clone)]
pub struct IndicatorPath {
    first: u64,
    bits: Vec<bool>,
}

impl IndicatorPath {
    /// Builds a path from explicit bits, `bits[i]` holding the indicator
    /// at index `first + i`.
    ///
    /// # Errors
    ///
    /// `Error::Domain` if `first < 1` or `bits` is empty.
    pub fn from_bits(first: u64, bits: Vec<bool>) -> Result<IndicatorPath> {
        if first < 1 {
            return Err(Error::Domain(format!(
                "indices start at 1, got first index {first}"
            )));
        }
        if bits.is_empty() {
            return Err(Error::Domain("indicator path must be nonempty".to_string()));
        }
        Ok(IndicatorPath { first, bits })
    }

    /// First index stored.
    pub fn first_index(&self) -> u64 {
        self.first
    }

    /// Last index stored.
    pub fn n_max(&self) -> u64 {
        self.first + self.bits.len() as u64 - 1
    }

    /// Indicator at index `n`; `false` outside the stored range.
    #[inline]
    pub fn get(&self, n: u64) -> bool {
        if n < self.first {
            return false;
        }
        self.bits
            .get((n - self.first) as usize)
            .copied()
            .unwrap_or(false)
    }

    /// Indices with `I_n = 1`, ascending.
    pub fn hits(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| self.first + i as u64)
    }

    /// Number of hits.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Draws one indicator path `I_n ~ Bernoulli(n^-beta)`, independently for
/// `n = 1..=n_max`, consuming exactly one uniform per index (in ascending
/// index order, which is part of the reproducibility contract).
///
/// # Errors
///
/// - `Error::Domain` if `n_max < 1`.
/// - `Error::Capacity` if `n_max` exceeds the sampler index cap.
pub fn sample_indicators(
    params: &SeriesParams,
    n_max: u64,
    rng: &mut RngStream,
) -> Result<IndicatorPath> {
    if n_max < 1 {
        return Err(Error::Domain(format!("n_max must be >= 1, got {n_max}")));
    }
    if n_max > SAMPLER_INDEX_CAP {
        return Err(Error::Capacity(format!(
            "indicator path of length {n_max} exceeds cap {SAMPLER_INDEX_CAP}"
        )));
    }
    let mut bits = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        bits.push(rng.bernoulli(params.term_probability(n)));
    }
    Ok(IndicatorPath { first: 1, bits })
}

// ============================================================================
// Record processes
// ============================================================================

/// Running maxima and record indicators of an i.i.d. Uniform(0,1) sequence.
///
/// Time `j` is a record iff `U_j` strictly exceeds `max(U_1..U_{j-1})`;
/// time 1 is always a record. Records at distinct times are independent
/// with `P(record at j) = 1/j`.
#[derive(Debug, Clone)]
pub struct RecordPath {
    maxima: Vec<f64>,
    records: Vec<bool>,
}

impl RecordPath {
    /// Draws the path `U_1..U_n_max` and tracks maxima/records.
    ///
    /// # Errors
    ///
    /// - `Error::Domain` if `n_max < 1`.
    /// - `Error::Capacity` if `n_max` exceeds the sampler index cap.
    pub fn simulate(n_max: u64, rng: &mut RngStream) -> Result<RecordPath> {
        if n_max < 1 {
            return Err(Error::Domain(format!("n_max must be >= 1, got {n_max}")));
        }
        if n_max > SAMPLER_INDEX_CAP {
            return Err(Error::Capacity(format!(
                "record path of length {n_max} exceeds cap {SAMPLER_INDEX_CAP}"
            )));
        }
        let mut maxima = Vec::with_capacity(n_max as usize);
        let mut records = Vec::with_capacity(n_max as usize);
        let mut running = f64::NEG_INFINITY;
        for _ in 0..n_max {
            let u = rng.next_f64();
            let is_rec = u > running;
            if is_rec {
                running = u;
            }
            maxima.push(running);
            records.push(is_rec);
        }
        Ok(RecordPath { maxima, records })
    }

    /// Number of times stored.
    pub fn n_max(&self) -> u64 {
        self.maxima.len() as u64
    }

    /// Running maximum `M_j` (1-based `j`).
    pub fn maximum(&self, j: u64) -> f64 {
        self.maxima[(j - 1) as usize]
    }

    /// Record indicator `I_j` (1-based `j`).
    pub fn is_record(&self, j: u64) -> bool {
        self.records[(j - 1) as usize]
    }

    /// All record indicators, index 0 holding time 1.
    pub fn records(&self) -> &[bool] {
        &self.records
    }

    /// Number of records up to the horizon.
    pub fn record_count(&self) -> usize {
        self.records.iter().filter(|&&b| b).count()
    }
}

// ============================================================================
// Series sampler (skip sampling)
// ============================================================================

/// Precomputed tables for drawing values of a truncated series.
///
/// Construction is `O(n_indices)`; each draw is `O(hits * log n_indices)`
/// where the expected hit count is the truncated sum of `p_n` (about
/// `ln N` when `beta = 1`).
#[derive(Debug, Clone)]
pub struct SeriesSampler {
    params: SeriesParams,
    n_trunc: u64,
    /// Sum of deterministic terms (indices with `p_n = 1`).
    base_offset: f64,
    /// Random indices, ascending.
    indices: Vec<u64>,
    /// `v_n` per random index (same rounding as `SeriesParams::term_value`).
    values: Vec<f64>,
    /// Cumulative hazard; `hazard[0] = 0`, `hazard[i] = H_i`, nondecreasing.
    hazard: Vec<f64>,
}

impl SeriesSampler {
    /// Builds tables for the truncation `n <= n_trunc` of `params`.
    ///
    /// # Errors
    ///
    /// - `Error::Domain` if `n_trunc` is below the variant's first index.
    /// - `Error::Unsupported` for [`SeriesVariant::PrimesOnly`]: the prime
    ///   index list must come from a sieve; use [`SeriesSampler::from_indices`].
    /// - `Error::Capacity` if the table would exceed the index cap.
    pub fn new(params: &SeriesParams, n_trunc: u64) -> Result<Self> {
        if params.variant() == SeriesVariant::PrimesOnly {
            return Err(Error::Unsupported(
                "prime-indexed sampling needs an explicit index list; build one with a prime \
                 table and call SeriesSampler::from_indices"
                    .to_string(),
            ));
        }
        let first = params.first_index();
        if n_trunc < first {
            return Err(Error::Domain(format!(
                "truncation {n_trunc} is below the first index {first} of the variant"
            )));
        }
        if n_trunc > SAMPLER_INDEX_CAP {
            return Err(Error::Capacity(format!(
                "truncation {n_trunc} exceeds the sampler index cap {SAMPLER_INDEX_CAP}"
            )));
        }
        // Indices with p_n = 1 contribute deterministically. That is n = 1
        // always, and every index when beta = 0.
        let mut base = CompensatedSum::new();
        let mut random_from = first;
        if params.beta() == 0.0 {
            for n in first..=n_trunc {
                base.add(params.term_value(n));
            }
            random_from = n_trunc + 1; // empty random part
        } else if first == 1 {
            base.add(params.term_value(1));
            random_from = 2;
        }
        let indices: Vec<u64> = (random_from..=n_trunc).collect();
        Self::assemble(params, n_trunc, base.value(), indices)
    }

    /// Builds tables from an explicit ascending list of random indices
    /// (e.g. the primes up to a sieve limit). Every index must satisfy
    /// `p_n < 1`, i.e. `n >= 2` when `beta > 0`.
    ///
    /// # Errors
    ///
    /// - `Error::Domain` if the list is unsorted, has duplicates, or
    ///   contains an index with `p_n = 1`.
    /// - `Error::Capacity` if the list exceeds the index cap.
    pub fn from_indices(params: &SeriesParams, indices: Vec<u64>) -> Result<Self> {
        if params.beta() == 0.0 {
            return Err(Error::Domain(
                "beta = 0 makes every indicator deterministic; from_indices requires p_n < 1"
                    .to_string(),
            ));
        }
        let first = params.first_index();
        let mut prev = 0u64;
        for &n in &indices {
            if n < first.max(2) {
                return Err(Error::Domain(format!(
                    "index {n} is below the variant's random range"
                )));
            }
            if n <= prev {
                return Err(Error::Domain(
                    "indices must be strictly ascending".to_string(),
                ));
            }
            prev = n;
        }
        let n_trunc = prev;
        Self::assemble(params, n_trunc, 0.0, indices)
    }

    fn assemble(
        params: &SeriesParams,
        n_trunc: u64,
        base_offset: f64,
        indices: Vec<u64>,
    ) -> Result<Self> {
        if indices.len() as u64 > SAMPLER_INDEX_CAP {
            return Err(Error::Capacity(format!(
                "{} random indices exceed the sampler index cap {SAMPLER_INDEX_CAP}",
                indices.len()
            )));
        }
        let mut values = Vec::with_capacity(indices.len());
        let mut hazard = Vec::with_capacity(indices.len() + 1);
        hazard.push(0.0);
        let mut acc = CompensatedSum::new();
        let mut prev_h = 0.0_f64;
        for &n in &indices {
            values.push(params.term_value(n));
            let p = params.term_probability(n);
            // -ln(1 - p), finite because p < 1 on the random range
            acc.add(-(-p).ln_1p());
            // clamp: compensated readout is within 1 ulp of the true sum,
            // but the binary search requires a nondecreasing table
            let h = acc.value().max(prev_h);
            hazard.push(h);
            prev_h = h;
        }
        Ok(SeriesSampler {
            params: *params,
            n_trunc,
            base_offset,
            indices,
            values,
            hazard,
        })
    }

    /// Parameters the tables were built for.
    pub fn params(&self) -> &SeriesParams {
        &self.params
    }

    /// Truncation level (largest index considered).
    pub fn n_trunc(&self) -> u64 {
        self.n_trunc
    }

    /// Expected number of random hits per draw.
    pub fn mean_hits(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &n in &self.indices {
            acc.add(self.params.term_probability(n));
        }
        acc.value()
    }

    /// Largest possible sample value (all indicators on).
    pub fn support_max(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.add(self.base_offset);
        for &v in &self.values {
            acc.add(v);
        }
        acc.value()
    }

    /// Smallest possible sample value (no random hits).
    pub fn support_min(&self) -> f64 {
        self.base_offset
    }

    /// Draws one truncated series value.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let total = *self.hazard.last().unwrap();
        let mut sum = self.base_offset;
        let mut pos = 0.0_f64;
        loop {
            pos += rng.next_exp();
            if pos > total {
                return sum;
            }
            // first interval whose right endpoint reaches pos
            let idx = self.hazard[1..].partition_point(|&h| h < pos);
            sum += self.values[idx];
            pos = self.hazard[idx + 1];
        }
    }

    /// Draws one value and reports the hit indices in ascending order.
    pub fn sample_with_hits(&self, rng: &mut RngStream, mut on_hit: impl FnMut(u64)) -> f64 {
        let total = *self.hazard.last().unwrap();
        let mut sum = self.base_offset;
        let mut pos = 0.0_f64;
        loop {
            pos += rng.next_exp();
            if pos > total {
                return sum;
            }
            let idx = self.hazard[1..].partition_point(|&h| h < pos);
            sum += self.values[idx];
            on_hit(self.indices[idx]);
            pos = self.hazard[idx + 1];
        }
    }
}

// ============================================================================
// Batches
// ============================================================================

/// A batch of independent truncated-series draws plus the provenance
/// needed to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBatch {
    /// Parameters of the sampled series.
    pub params: SeriesParams,
    /// Truncation level.
    pub n_trunc: u64,
    /// Seed of the base stream.
    pub seed: u64,
    /// Stream id of the base stream.
    pub stream_id: u64,
    /// The draws, in generation order.
    pub values: Vec<f64>,
}

/// Draws `n_samples` values from a prepared sampler.
///
/// Work is split into chunks of [`BATCH_CHUNK`] samples; chunk `c` draws
/// sequentially from `base_rng.substream(c)` and chunks are concatenated
/// in order. Rayon parallelism (or the lack of it) cannot change the
/// output.
pub fn sample_batch(sampler: &SeriesSampler, n_samples: usize, base_rng: &RngStream) -> Vec<f64> {
    let n_chunks = n_samples.div_ceil(BATCH_CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = base_rng.substream(c as u64);
            let len = BATCH_CHUNK.min(n_samples - c * BATCH_CHUNK);
            (0..len).map(|_| sampler.sample(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n_samples);
    for ch in chunks {
        out.extend_from_slice(&ch);
    }
    out
}

/// Builds a sampler for `params` truncated at `n_trunc` and draws a batch.
///
/// # Errors
///
/// Propagates [`SeriesSampler::new`] errors; additionally `Error::Domain`
/// if `n_samples` is zero.
pub fn sample_series(
    params: &SeriesParams,
    n_trunc: u64,
    n_samples: usize,
    base_rng: &RngStream,
) -> Result<SampleBatch> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive".to_string()));
    }
    let sampler = SeriesSampler::new(params, n_trunc)?;
    let values = sample_batch(&sampler, n_samples, base_rng);
    Ok(SampleBatch {
        params: *params,
        n_trunc,
        seed: base_rng.seed(),
        stream_id: base_rng.stream_id(),
        values,
    })
}

// ============================================================================
// Dyadic block hit laws (beta = 1)
// ============================================================================

/// Exact probability that the dyadic block `J_k = (2^k, 2^(k+1)]` contains
/// exactly one hit, for indicators with `p_n = 1/n`.
///
/// Computed in product form
/// `prod_{m in J_k} (1 - 1/m) * sum_{n in J_k} 1/(n-1)`;
/// the product telescopes to exactly 1/2, so the value equals `z_k / 2`
/// where `z_k = sum_{2^k <= j < 2^(k+1)} 1/j` is the harmonic sum over the
/// shifted block.
///
/// # Errors
///
/// - `Error::Unsupported` unless `params.beta() == 1`.
/// - `Error::Capacity` for `k > 30` (the evaluation walks the block).
pub fn block_single_hit_prob(params: &SeriesParams, k: u32) -> Result<f64> {
    if params.beta() != 1.0 {
        return Err(Error::Unsupported(format!(
            "block hit law is derived for beta = 1, got beta = {}",
            params.beta()
        )));
    }
    if k > 30 {
        return Err(Error::Capacity(format!(
            "block J_{k} has 2^{k} members; exact walk capped at k = 30"
        )));
    }
    let lo = (1u64 << k) + 1;
    let hi = 1u64 << (k + 1);
    let mut log_prod = CompensatedSum::new();
    let mut weight = CompensatedSum::new();
    for n in lo..=hi {
        log_prod.add((-1.0 / n as f64).ln_1p());
        weight.add(1.0 / (n - 1) as f64);
    }
    Ok(log_prod.value().exp() * weight.value())
}

/// Conditional law of the hit position in `J_k = (2^k, 2^(k+1)]`, given
/// that the block contains exactly one hit (indicators with `p_n = 1/n`):
///
/// ```text
///     P(position = n | one hit) = 1 / (z_k * (n - 1)),   n in J_k,
/// ```
///
/// with `z_k` the harmonic normalizer. As `k` grows, `z_k -> ln 2` and the
/// law of `position / 2^k` stabilizes: the block geometry is scale-free.
#[derive(Debug, Clone)]
pub struct BlockConditional {
    k: u32,
    z: f64,
}

impl BlockConditional {
    /// Block exponent `k`.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Harmonic normalizer `z_k = sum_{2^k <= j < 2^(k+1)} 1/j`.
    pub fn harmonic_z(&self) -> f64 {
        self.z
    }

    /// Support of the law: the block `(2^k, 2^(k+1)]`.
    pub fn support(&self) -> std::ops::RangeInclusive<u64> {
        ((1u64 << self.k) + 1)..=(1u64 << (self.k + 1))
    }

    /// Probability mass at position `n` (zero off the block).
    pub fn prob(&self, n: u64) -> f64 {
        if self.support().contains(&n) {
            1.0 / (self.z * (n - 1) as f64)
        } else {
            0.0
        }
    }

    /// Materialized mass vector over the support, ascending in `n`.
    ///
    /// # Errors
    ///
    /// `Error::Capacity` for `k > 24`.
    pub fn probs(&self) -> Result<Vec<f64>> {
        if self.k > 24 {
            return Err(Error::Capacity(format!(
                "materializing 2^{} conditional masses exceeds the cap",
                self.k
            )));
        }
        Ok(self.support().map(|n| self.prob(n)).collect())
    }
}

/// Builds the conditional single-hit law for block `J_k`.
///
/// # Errors
///
/// `Error::Capacity` for `k > 30` (the normalizer walks the block).
pub fn block_conditional(k: u32) -> Result<BlockConditional> {
    if k > 30 {
        return Err(Error::Capacity(format!(
            "harmonic normalizer walk capped at k = 30, got {k}"
        )));
    }
    let mut z = CompensatedSum::new();
    for j in (1u64 << k)..(1u64 << (k + 1)) {
        z.add(1.0 / j as f64);
    }
    Ok(BlockConditional { k, z: z.value() })
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn std_params() -> SeriesParams {
        SeriesParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn indicator_marginals_match_probabilities() {
        // freq(I_n) vs n^-beta within 4 sigma, pooled over many paths
        let params = std_params();
        let mut rng = RngStream::new(11, 0);
        let paths = 20_000;
        let n_max = 20;
        let mut counts = vec![0u64; n_max as usize + 1];
        for _ in 0..paths {
            let path = sample_indicators(&params, n_max, &mut rng).unwrap();
            for n in 1..=n_max {
                if path.get(n) {
                    counts[n as usize] += 1;
                }
            }
        }
        assert_eq!(counts[1], paths, "index 1 always fires");
        for n in [2u64, 5, 10, 20] {
            let p = 1.0 / n as f64;
            let freq = counts[n as usize] as f64 / paths as f64;
            let sigma = (p * (1.0 - p) / paths as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * sigma,
                "I_{n}: freq {freq} vs p {p} (4 sigma = {})",
                4.0 * sigma
            );
        }
    }

    #[test]
    fn indicator_pairs_uncorrelated() {
        let params = std_params();
        let mut rng = RngStream::new(12, 0);
        let paths = 40_000;
        let (mut c2, mut c5, mut c25) = (0u64, 0u64, 0u64);
        for _ in 0..paths {
            let path = sample_indicators(&params, 5, &mut rng).unwrap();
            let (a, b) = (path.get(2), path.get(5));
            c2 += a as u64;
            c5 += b as u64;
            c25 += (a && b) as u64;
        }
        let n = paths as f64;
        let cov = c25 as f64 / n - (c2 as f64 / n) * (c5 as f64 / n);
        // Var of the empirical covariance is ~ p2 p5 / n at independence
        let sigma = (0.5 * 0.2 / n).sqrt();
        assert!(cov.abs() <= 4.0 * sigma, "cov {cov} vs 4 sigma {}", 4.0 * sigma);
    }

    #[test]
    fn record_frequencies_follow_one_over_n() {
        let mut rng = RngStream::new(13, 0);
        let paths = 30_000;
        let n_max = 12;
        let mut counts = vec![0u64; n_max as usize + 1];
        let mut max_sum = 0.0;
        for _ in 0..paths {
            let rp = RecordPath::simulate(n_max, &mut rng).unwrap();
            for j in 1..=n_max {
                if rp.is_record(j) {
                    counts[j as usize] += 1;
                }
            }
            max_sum += rp.maximum(n_max);
        }
        assert_eq!(counts[1], paths, "time 1 is always a record");
        for j in [2u64, 3, 7, 12] {
            let p = 1.0 / j as f64;
            let freq = counts[j as usize] as f64 / paths as f64;
            let sigma = (p * (1.0 - p) / paths as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * sigma,
                "record at {j}: freq {freq} vs {p}"
            );
        }
        // E max(U_1..U_12) = 12/13; Var = n/((n+1)^2 (n+2)) for beta(12,1)
        let mean = max_sum / paths as f64;
        let want = 12.0 / 13.0;
        let sigma = (12.0 / (13.0_f64.powi(2) * 14.0) / paths as f64).sqrt();
        assert!((mean - want).abs() <= 4.0 * sigma, "E M_12: {mean} vs {want}");
    }

    #[test]
    fn record_indicators_at_two_times_are_independent() {
        let mut rng = RngStream::new(14, 0);
        let paths = 40_000;
        let (mut c3, mut c8, mut c38) = (0u64, 0u64, 0u64);
        for _ in 0..paths {
            let rp = RecordPath::simulate(8, &mut rng).unwrap();
            let (a, b) = (rp.is_record(3), rp.is_record(8));
            c3 += a as u64;
            c8 += b as u64;
            c38 += (a && b) as u64;
        }
        let n = paths as f64;
        let cov = c38 as f64 / n - (c3 as f64 / n) * (c8 as f64 / n);
        let sigma = ((1.0 / 3.0) * (1.0 / 8.0) / n).sqrt();
        assert!(cov.abs() <= 4.0 * sigma, "cov {cov} vs {}", 4.0 * sigma);
    }

    #[test]
    fn sampler_matches_direct_bernoulli_law() {
        // Same truncation, two independent estimators of P(S > 1.5):
        // skip sampling vs brute-force indicator sweep.
        let params = std_params();
        let n_trunc = 30u64;
        let sampler = SeriesSampler::new(&params, n_trunc).unwrap();
        let draws = 60_000;

        let mut rng = RngStream::new(77, 0);
        let skip_hits = (0..draws)
            .filter(|_| sampler.sample(&mut rng) > 1.5)
            .count();

        let mut rng2 = RngStream::new(78, 0);
        let mut sweep_hits = 0usize;
        for _ in 0..draws {
            let path = sample_indicators(&params, n_trunc, &mut rng2).unwrap();
            let s: f64 = path.hits().map(|n| params.term_value(n)).sum();
            if s > 1.5 {
                sweep_hits += 1;
            }
        }
        let (pa, pb) = (
            skip_hits as f64 / draws as f64,
            sweep_hits as f64 / draws as f64,
        );
        // two-sample 4 sigma band
        let sigma = (2.0 * 0.25 / draws as f64).sqrt();
        assert!(
            (pa - pb).abs() <= 4.0 * sigma,
            "skip {pa} vs sweep {pb} (band {})",
            4.0 * sigma
        );
    }

    #[test]
    fn sampler_support_and_forced_term() {
        let params = SeriesParams::new(2.0, 1.0).unwrap();
        let sampler = SeriesSampler::new(&params, 100).unwrap();
        assert_eq!(sampler.support_min(), 1.0, "n = 1 always fires");
        assert!(sampler.support_max() < 1.0 + std::f64::consts::PI.powi(2) / 6.0);
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let v = sampler.sample(&mut rng);
            assert!(v >= 1.0 && v <= sampler.support_max());
        }
    }

    #[test]
    fn sampler_beta_zero_is_deterministic() {
        let params = SeriesParams::new(2.0, 0.0).unwrap();
        let sampler = SeriesSampler::new(&params, 50).unwrap();
        let mut rng = RngStream::new(1, 0);
        let v1 = sampler.sample(&mut rng);
        let v2 = sampler.sample(&mut rng);
        assert_eq!(v1, v2, "beta = 0 has no randomness");
        let direct: f64 = (1..=50u64).map(|n| 1.0 / (n * n) as f64).sum();
        assert!((v1 - direct).abs() < 1e-12);
    }

    #[test]
    fn from_indices_validation() {
        let params = std_params();
        assert!(SeriesSampler::from_indices(&params, vec![2, 3, 5]).is_ok());
        assert!(SeriesSampler::from_indices(&params, vec![3, 2]).is_err());
        assert!(SeriesSampler::from_indices(&params, vec![2, 2]).is_err());
        assert!(SeriesSampler::from_indices(&params, vec![1, 2]).is_err());
    }

    #[test]
    fn batch_is_reproducible_and_prefix_stable() {
        let params = std_params();
        let base = RngStream::new(msg_seed(), 9);
        let a = sample_series(&params, 1000, 70_000, &base).unwrap();
        let b = sample_series(&params, 1000, 70_000, &base).unwrap();
        assert_eq!(a.values, b.values, "same seed, same batch");
        let small = sample_series(&params, 1000, 1_000, &base).unwrap();
        assert_eq!(&a.values[..1_000], &small.values[..], "prefix stability");
    }

    fn msg_seed() -> u64 {
        0xDEAD_BEEF
    }

    #[test]
    fn batch_thread_count_invariance() {
        let params = std_params();
        let base = RngStream::new(31415, 0);
        let sampler = SeriesSampler::new(&params, 500).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| sample_batch(&sampler, 200_000, &base))
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one, eight, "thread count must not change the batch");
    }

    #[test]
    fn block_single_hit_matches_harmonic_closed_form() {
        let params = std_params();
        for k in 0..=20u32 {
            let p = block_single_hit_prob(&params, k).unwrap();
            let z = block_conditional(k).unwrap().harmonic_z();
            assert!(
                (p - z / 2.0).abs() <= 1e-12,
                "k={k}: product form {p} vs z_k/2 {}",
                z / 2.0
            );
        }
    }

    #[test]
    fn block_single_hit_matches_brute_force() {
        // Independent oracle: O(B^2) sum over "n is the unique hit".
        let params = std_params();
        for k in 0..=10u32 {
            let lo = (1u64 << k) + 1;
            let hi = 1u64 << (k + 1);
            let mut total = 0.0_f64;
            for n in lo..=hi {
                let mut term = 1.0 / n as f64;
                for m in lo..=hi {
                    if m != n {
                        term *= 1.0 - 1.0 / m as f64;
                    }
                }
                total += term;
            }
            let p = block_single_hit_prob(&params, k).unwrap();
            assert!(
                (p - total).abs() <= 1e-12,
                "k={k}: exact {p} vs brute force {total}"
            );
        }
    }

    #[test]
    fn block_single_hit_probability_tends_to_half_ln2() {
        // z_k -> ln 2 with |z_k - ln 2| <= 2^-(k+1)
        for k in [5u32, 10, 15, 22] {
            let z = block_conditional(k).unwrap().harmonic_z();
            assert!(
                (z - std::f64::consts::LN_2).abs() <= 0.5_f64.powi(k as i32 + 1),
                "k={k}: z_k = {z}"
            );
        }
    }

    #[test]
    fn block_conditional_normalizes_and_matches_mc() {
        let bc = block_conditional(3).unwrap();
        let probs = bc.probs().unwrap();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);

        // MC cross-check: condition indicator paths on one hit in J_3
        let params = std_params();
        let mut rng = RngStream::new(99, 0);
        let mut counts = std::collections::HashMap::new();
        let mut singles = 0u64;
        for _ in 0..60_000 {
            let path = sample_indicators(&params, 16, &mut rng).unwrap();
            let hits: Vec<u64> = path.hits().filter(|&n| n > 8 && n <= 16).collect();
            if hits.len() == 1 {
                singles += 1;
                *counts.entry(hits[0]).or_insert(0u64) += 1;
            }
        }
        for n in 9..=16u64 {
            let want = bc.prob(n);
            let got = *counts.get(&n).unwrap_or(&0) as f64 / singles as f64;
            let sigma = (want * (1.0 - want) / singles as f64).sqrt();
            assert!(
                (got - want).abs() <= 4.0 * sigma,
                "n={n}: {got} vs {want} ({singles} singles)"
            );
        }
    }

    #[test]
    fn block_ops_regime_checks() {
        let p_half = SeriesParams::new(1.0, 0.5).unwrap();
        assert!(matches!(
            block_single_hit_prob(&p_half, 3),
            Err(Error::Unsupported(_))
        ));
        let p = std_params();
        assert!(matches!(
            block_single_hit_prob(&p, 31),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(block_conditional(31), Err(Error::Capacity(_))));
    }

    proptest! {
        #[test]
        fn prop_block_conditional_sums_to_one(k in 0u32..18) {
            let bc = block_conditional(k).unwrap();
            let total: f64 = bc.probs().unwrap().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-11);
        }

        #[test]
        fn prop_sample_within_support(
            s in 0.5_f64..3.0,
            beta in 0.25_f64..1.0,
            n_trunc in 2u64..200,
            seed in 0u64..1000,
        ) {
            let params = SeriesParams::new(s, beta).unwrap();
            let sampler = SeriesSampler::new(&params, n_trunc).unwrap();
            let mut rng = RngStream::new(seed, 0);
            for _ in 0..32 {
                let v = sampler.sample(&mut rng);
                prop_assert!(v >= sampler.support_min() - 1e-12);
                prop_assert!(v <= sampler.support_max() + 1e-12);
            }
        }
    }
}

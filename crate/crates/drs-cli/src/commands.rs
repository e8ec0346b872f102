//! Implementations of the subcommands.
//!
//! Each function takes its parsed argument struct, runs the corresponding
//! library routines, and emits either a JSON envelope or a CSV document
//! (see [`crate::output`]). All randomized commands draw from seeded
//! counter-based streams, so reruns with equal flags produce identical
//! bytes regardless of the worker-thread count.

use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use drs_core::charfn::{
    self, DecayKind, PhaseFn, TruncationPolicy, VdcParams,
};
use drs_core::exact::AtomicDistribution;
use drs_core::hist::Histogram;
use drs_core::numerics::RngStream;
use drs_core::primes;
use drs_core::records::{self, BetaDecompositionReport, StatCheck};
use drs_core::sampler::{sample_batch, SeriesSampler};
use drs_core::series::{DyadicBlock, SeriesParams};

use crate::cli::{
    ApCheckArgs, ApFamily, CharfnArgs, DecayFitArgs, ExactArgs, Figure1Args, MertensArgs,
    OutputFormat, RecordsArgs, SampleArgs, SingularityArgs, SobolevArgs, VdcSweepArgs,
};
use crate::output::{emit, envelope_json, write_file, Csv, CsvField};

/// The four reference exponents sampled by `drs figure1`, in stream-id
/// order (exponent `i` draws from stream id `i` of the base seed).
pub const FIGURE1_EXPONENTS: [f64; 4] = [0.6, 1.0, 1.4, 2.2];

/// Certificate tolerance used by `drs decay-fit` (relative error of the
/// modulus at every retained grid point).
pub const DECAY_FIT_TOL: f64 = 0.05;

/// Block exponents covered by `drs vdc-sweep`.
pub const VDC_SWEEP_K_MAX: u32 = 30;

/// Longest sub-interval summed per block in `drs vdc-sweep`.
pub const VDC_SWEEP_MAX_LEN: u64 = 1 << 16;

// ============================================================================
// figure1
// ============================================================================

/// Samples the series at one exponent and bins the draws.
///
/// This is the exact pipeline behind one `drs figure1` curve, factored out
/// so the acceptance checklist can rerun it at other bin widths.
pub fn figure1_histogram(
    s: f64,
    n_trunc: u64,
    samples: u64,
    seed: u64,
    stream_id: u64,
    bin_width: f64,
) -> drs_core::Result<Histogram> {
    if samples == 0 {
        return Err(drs_core::Error::Domain(
            "samples must be positive".to_string(),
        ));
    }
    let params = SeriesParams::new(s, 1.0)?;
    let sampler = SeriesSampler::new(&params, n_trunc)?;
    let values = sample_batch(&sampler, samples as usize, &RngStream::new(seed, stream_id));
    let mut hist = Histogram::new(bin_width)?;
    hist.add_all(&values)?;
    Ok(hist)
}

#[derive(Debug, Serialize)]
struct Figure1Config {
    s_values: [f64; 4],
    beta: f64,
    n_trunc: u64,
    samples: u64,
    seed: u64,
    bins: f64,
}

/// Summary of one written histogram file.
#[derive(Debug, Serialize)]
pub struct Figure1Curve {
    /// Exponent of this curve.
    pub s: f64,
    /// RNG stream id used for this curve.
    pub stream_id: u64,
    /// File name (inside the output directory).
    pub file: String,
    /// Riemann sum of the density over all bins; 1 up to rounding.
    pub integral: f64,
    /// Left edge of the first nonempty bin.
    pub support_start: f64,
    /// Largest bin density.
    pub max_density: f64,
    /// Number of nonempty bins.
    pub nonempty_bins: u64,
}

pub fn figure1(args: &Figure1Args) -> Result<()> {
    let mut curves = Vec::with_capacity(FIGURE1_EXPONENTS.len());
    for (i, &s) in FIGURE1_EXPONENTS.iter().enumerate() {
        let hist = figure1_histogram(s, args.n_trunc, args.samples, args.seed, i as u64, args.bins)?;
        let file = format!("figure1_s{s:.1}.csv");
        let mut csv = Csv::new(&["bin_left", "density"]);
        for row in hist.density_rows() {
            csv.row(&[CsvField::F(row.bin_left), CsvField::F(row.density)]);
        }
        write_file(&args.out.join(&file), &csv.into_string())?;
        curves.push(Figure1Curve {
            s,
            stream_id: i as u64,
            file,
            integral: hist.integral(),
            support_start: hist.support_start().unwrap_or(f64::NAN),
            max_density: hist.max_density().unwrap_or(f64::NAN),
            nonempty_bins: hist.nonempty_bins() as u64,
        });
    }
    let config = Figure1Config {
        s_values: FIGURE1_EXPONENTS,
        beta: 1.0,
        n_trunc: args.n_trunc,
        samples: args.samples,
        seed: args.seed,
        bins: args.bins,
    };
    emit(&None, &envelope_json("figure1", &config, &curves)?)
}

// ============================================================================
// sample
// ============================================================================

#[derive(Debug, Serialize)]
struct SampleConfig {
    s: f64,
    beta: f64,
    n_trunc: u64,
    samples: u64,
    seed: u64,
    stream_id: u64,
}

#[derive(Debug, Serialize)]
struct SampleResult {
    count: u64,
    mean: f64,
    min: f64,
    max: f64,
    values: Vec<f64>,
}

pub fn sample(args: &SampleArgs) -> Result<()> {
    let params = SeriesParams::new(args.s, args.beta)?;
    let batch = drs_core::sampler::sample_series(
        &params,
        args.n_trunc,
        args.samples as usize,
        &RngStream::new(args.seed, 0),
    )?;
    let config = SampleConfig {
        s: args.s,
        beta: args.beta,
        n_trunc: args.n_trunc,
        samples: args.samples,
        seed: args.seed,
        stream_id: 0,
    };
    let text = match args.out.format {
        OutputFormat::Json => {
            let values = batch.values;
            let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for &v in &values {
                min = min.min(v);
                max = max.max(v);
                sum += v;
            }
            let result = SampleResult {
                count: values.len() as u64,
                mean: sum / values.len() as f64,
                min,
                max,
                values,
            };
            envelope_json("sample", &config, &result)?
        }
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["value"]);
            for &v in &batch.values {
                csv.row(&[CsvField::F(v)]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// exact
// ============================================================================

#[derive(Debug, Serialize)]
struct ExactConfig {
    s: f64,
    beta: f64,
    n_trunc: u64,
}

#[derive(Debug, Serialize)]
struct ExactResult {
    atom_count: u64,
    total_mass: f64,
    mean: f64,
    second_moment: f64,
    /// `[value, probability]` pairs in increasing value order.
    atoms: Vec<(f64, f64)>,
}

pub fn exact(args: &ExactArgs) -> Result<()> {
    let params = SeriesParams::new(args.s, args.beta)?;
    let dist = AtomicDistribution::enumerate(&params, args.n_trunc)?;
    let config = ExactConfig {
        s: args.s,
        beta: args.beta,
        n_trunc: args.n_trunc,
    };
    let text = match args.out.format {
        OutputFormat::Json => {
            let result = ExactResult {
                atom_count: dist.len() as u64,
                total_mass: dist.total_mass(),
                mean: dist.exact_moment(1),
                second_moment: dist.exact_moment(2),
                atoms: dist.atoms().collect(),
            };
            envelope_json("exact", &config, &result)?
        }
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["value", "prob"]);
            for (v, p) in dist.atoms() {
                csv.row(&[CsvField::F(v), CsvField::F(p)]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// charfn
// ============================================================================

#[derive(Debug, Serialize)]
struct CharfnConfig {
    s: f64,
    beta: f64,
    t_min: f64,
    t_max: f64,
    ppd: u32,
    tol: f64,
    n_cap: u64,
}

pub fn charfn(args: &CharfnArgs) -> Result<()> {
    let params = SeriesParams::new(args.s, args.beta)?;
    let grid = charfn::log_grid(args.t_min, args.t_max, args.ppd)?;
    let policy = TruncationPolicy::default();
    let profile = charfn::profile(&params, &grid, policy)?;
    let config = CharfnConfig {
        s: args.s,
        beta: args.beta,
        t_min: args.t_min,
        t_max: args.t_max,
        ppd: args.ppd,
        tol: policy.tol,
        n_cap: policy.n_cap,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("charfn", &config, &profile)?,
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["t", "modulus", "log_modulus_sq", "trunc_error", "n_used"]);
            for p in &profile.points {
                csv.row(&[
                    CsvField::F(p.t),
                    CsvField::F(p.modulus),
                    CsvField::F(p.log_modulus_sq),
                    CsvField::F(p.trunc_error),
                    CsvField::U(p.n_used),
                ]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// decay-fit
// ============================================================================

#[derive(Debug, Serialize)]
struct DecayFitConfig {
    s: f64,
    beta: f64,
    t_min: f64,
    t_max: f64,
    ppd: u32,
    tol: f64,
}

pub fn decay_fit(args: &DecayFitArgs) -> Result<()> {
    let params = SeriesParams::new(args.s, args.beta)?;
    let grid = charfn::log_grid(args.t_min, args.t_max, args.ppd)?;
    let fit = charfn::decay_fit(&params, &grid, DECAY_FIT_TOL)?;
    let config = DecayFitConfig {
        s: args.s,
        beta: args.beta,
        t_min: args.t_min,
        t_max: args.t_max,
        ppd: args.ppd,
        tol: DECAY_FIT_TOL,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("decay-fit", &config, &fit)?,
        OutputFormat::Csv => {
            let response = match fit.kind {
                DecayKind::PowerLaw => "ln_modulus",
                DecayKind::StretchedExponential => "ln_neg_ln_modulus",
            };
            let mut csv = Csv::new(&["ln_t", response]);
            for &(x, y) in &fit.points {
                csv.row(&[CsvField::F(x), CsvField::F(y)]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// vdc-sweep
// ============================================================================

#[derive(Debug, Serialize)]
struct VdcSweepConfig {
    s: f64,
    t_min: f64,
    t_max: f64,
    k_max: u32,
    q_values: [u32; 3],
    max_len: u64,
    c: f64,
}

/// One sweep case: the opening sub-interval of block `J_k`, summed
/// directly and compared against the oscillation bound.
#[derive(Debug, Serialize)]
pub struct VdcCase {
    /// Frequency.
    pub t: f64,
    /// Block exponent.
    pub k: u32,
    /// Differencing depth of the bound.
    pub q: u32,
    /// Number of summed integers.
    pub interval_len: u64,
    /// Modulus of the direct exponential sum.
    pub sum_modulus: f64,
    /// Oscillation bound for intervals of this length inside the block.
    pub bound: f64,
    /// `sum_modulus / bound`.
    pub ratio: f64,
}

/// Sweep summary plus all cases.
#[derive(Debug, Serialize)]
pub struct VdcSweepReport {
    /// Number of evaluated cases.
    pub cases: u64,
    /// Cases with `sum_modulus > bound`.
    pub violations: u64,
    /// Largest observed `sum_modulus / bound`.
    pub max_ratio: f64,
    /// All cases, ordered by (t, k, q).
    pub rows: Vec<VdcCase>,
}

/// Runs the sweep over decade frequencies `10^j` in `[t_min, t_max]`,
/// block exponents `k <= 30`, and depths `q in {0, 1, 2}`.
///
/// Shared by `drs vdc-sweep` and the acceptance checklist.
pub fn vdc_sweep_report(s: f64, t_min: f64, t_max: f64) -> drs_core::Result<VdcSweepReport> {
    if !(t_min.is_finite() && t_max.is_finite()) || t_min <= 0.0 || t_max < t_min {
        return Err(drs_core::Error::Domain(format!(
            "need 0 < t_min <= t_max, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    let j_lo = (t_min.log10() - 1e-9).ceil() as i32;
    let j_hi = (t_max.log10() + 1e-9).floor() as i32;
    if j_lo > j_hi {
        return Err(drs_core::Error::Domain(format!(
            "no power of ten lies in [{t_min}, {t_max}]"
        )));
    }
    let mut rows = Vec::new();
    let mut violations = 0u64;
    let mut max_ratio = 0.0f64;
    for j in j_lo..=j_hi {
        let t = 10f64.powi(j);
        for k in 0..=VDC_SWEEP_K_MAX {
            let block = DyadicBlock { k };
            let len = block.len().min(VDC_SWEEP_MAX_LEN);
            let lo = block.lo();
            let phase = PhaseFn::Power { t, s };
            let sum = charfn::exp_sum_direct(&phase, lo, lo + len - 1, None);
            for q in 0..=2u32 {
                let vp = VdcParams::for_power_phase(q, k, t, s)?;
                let bound = charfn::vdc_bound(&vp, len);
                let ratio = sum.norm() / bound;
                if ratio > 1.0 {
                    violations += 1;
                }
                max_ratio = max_ratio.max(ratio);
                rows.push(VdcCase {
                    t,
                    k,
                    q,
                    interval_len: len,
                    sum_modulus: sum.norm(),
                    bound,
                    ratio,
                });
            }
        }
    }
    Ok(VdcSweepReport {
        cases: rows.len() as u64,
        violations,
        max_ratio,
        rows,
    })
}

pub fn vdc_sweep(args: &VdcSweepArgs) -> Result<()> {
    let report = vdc_sweep_report(args.s, args.t_min, args.t_max)?;
    let config = VdcSweepConfig {
        s: args.s,
        t_min: args.t_min,
        t_max: args.t_max,
        k_max: VDC_SWEEP_K_MAX,
        q_values: [0, 1, 2],
        max_len: VDC_SWEEP_MAX_LEN,
        c: VdcParams::DEFAULT_C,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("vdc-sweep", &config, &report)?,
        OutputFormat::Csv => {
            let mut csv = Csv::new(&[
                "t",
                "k",
                "q",
                "interval_len",
                "sum_modulus",
                "bound",
                "ratio",
            ]);
            for r in &report.rows {
                csv.row(&[
                    CsvField::F(r.t),
                    CsvField::U(u64::from(r.k)),
                    CsvField::U(u64::from(r.q)),
                    CsvField::U(r.interval_len),
                    CsvField::F(r.sum_modulus),
                    CsvField::F(r.bound),
                    CsvField::F(r.ratio),
                ]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// records
// ============================================================================

#[derive(Debug, Serialize)]
struct RecordsConfig {
    n: u64,
    samples: u64,
    seed: u64,
    stream_id: u64,
}

#[derive(Debug, Serialize)]
struct RecordsResult {
    moments: records::RecordMomentReport,
    decomposition: BetaDecompositionReport,
}

fn stat_check_rows(csv: &mut Csv, kind: &'static str, checks: &[StatCheck]) {
    for c in checks {
        csv.row(&[
            CsvField::S(kind),
            CsvField::U(c.j),
            CsvField::F(c.observed),
            CsvField::F(c.expected),
            CsvField::F(c.sigma),
            CsvField::S(if c.within_four_sigma() { "true" } else { "false" }),
        ]);
    }
}

pub fn records_cmd(args: &RecordsArgs) -> Result<()> {
    let moments = records::record_moment_report(args.n_trunc)?;
    let decomposition = records::beta_decomposition_check(
        args.n_trunc,
        args.samples,
        &RngStream::new(args.seed, 0),
    )?;
    let config = RecordsConfig {
        n: args.n_trunc,
        samples: args.samples,
        seed: args.seed,
        stream_id: 0,
    };
    let text = match args.out.format {
        OutputFormat::Json => {
            let result = RecordsResult {
                moments,
                decomposition,
            };
            envelope_json("records", &config, &result)?
        }
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["check", "j", "observed", "expected", "sigma", "ok"]);
            stat_check_rows(&mut csv, "mean_maximum", std::slice::from_ref(&decomposition.mean_maximum));
            stat_check_rows(&mut csv, "unit_ratio_prob", &decomposition.unit_ratio_prob);
            stat_check_rows(
                &mut csv,
                "conditional_ratio_mean",
                &decomposition.conditional_ratio_mean,
            );
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// sobolev
// ============================================================================

#[derive(Debug, Serialize)]
struct SobolevConfig {
    s: f64,
    beta: f64,
    gamma: f64,
    t_max: f64,
}

pub fn sobolev(args: &SobolevArgs) -> Result<()> {
    let params = SeriesParams::new(args.s, args.beta)?;
    let report = charfn::sobolev_energy(&params, args.gamma, args.t_max)?;
    let config = SobolevConfig {
        s: args.s,
        beta: args.beta,
        gamma: args.gamma,
        t_max: args.t_max,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("sobolev", &config, &report)?,
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["t_lo", "t_hi", "contribution", "points_used"]);
            for seg in &report.segments {
                csv.row(&[
                    CsvField::F(seg.t_lo),
                    CsvField::F(seg.t_hi),
                    CsvField::F(seg.contribution),
                    CsvField::U(seg.points_used as u64),
                ]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// mertens
// ============================================================================

#[derive(Debug, Serialize)]
struct MertensConfig {
    limit: u64,
    squarefree_at: u64,
}

/// One decade row of the Mertens table.
#[derive(Debug, Serialize)]
pub struct MertensRow {
    /// Evaluation point.
    pub x: u64,
    /// Normalized Mertens product at `x` (tends to 1).
    pub ratio: f64,
    /// `|ratio - 1|`.
    pub abs_gap: f64,
}

#[derive(Debug, Serialize)]
struct SquarefreeSummary {
    x: u64,
    density: f64,
    expected: f64,
    abs_error: f64,
}

#[derive(Debug, Serialize)]
struct MertensResult {
    decades: Vec<MertensRow>,
    squarefree: SquarefreeSummary,
}

/// Builds the decade table `x = 10^3, ..., <= limit`.
///
/// Shared by `drs mertens` and the acceptance checklist.
pub fn mertens_decades(pt: &primes::PrimeTable, limit: u64) -> drs_core::Result<Vec<MertensRow>> {
    if limit < 1_000 {
        return Err(drs_core::Error::Domain(format!(
            "limit must be at least 10^3, got {limit}"
        )));
    }
    let mut rows = Vec::new();
    let mut x = 1_000u64;
    while x <= limit {
        let ratio = primes::mertens_ratio(pt, x)?;
        rows.push(MertensRow {
            x,
            ratio,
            abs_gap: (ratio - 1.0).abs(),
        });
        x = x.saturating_mul(10);
    }
    Ok(rows)
}

pub fn mertens(args: &MertensArgs) -> Result<()> {
    let pt = primes::sieve(args.limit)?;
    let decades = mertens_decades(&pt, args.limit)?;
    let sf_at = args.limit.min(10_000_000);
    let density = primes::squarefree_density(&pt, sf_at)?;
    let expected = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let config = MertensConfig {
        limit: args.limit,
        squarefree_at: sf_at,
    };
    let text = match args.out.format {
        OutputFormat::Json => {
            let result = MertensResult {
                decades,
                squarefree: SquarefreeSummary {
                    x: sf_at,
                    density,
                    expected,
                    abs_error: (density - expected).abs(),
                },
            };
            envelope_json("mertens", &config, &result)?
        }
        OutputFormat::Csv => {
            let mut csv = Csv::new(&["x", "ratio", "abs_gap"]);
            for r in &decades {
                csv.row(&[CsvField::U(r.x), CsvField::F(r.ratio), CsvField::F(r.abs_gap)]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// singularity
// ============================================================================

#[derive(Debug, Serialize)]
struct SingularityConfig {
    s: f64,
    epsilon: f64,
    n_scale: u64,
    samples: u64,
    seed: u64,
    stream_id: u64,
}

pub fn singularity(args: &SingularityArgs) -> Result<()> {
    let report = primes::singularity_experiment(
        args.s,
        args.epsilon,
        args.n_trunc,
        args.samples,
        &RngStream::new(args.seed, 0),
    )?;
    let config = SingularityConfig {
        s: args.s,
        epsilon: args.epsilon,
        n_scale: args.n_trunc,
        samples: args.samples,
        seed: args.seed,
        stream_id: 0,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("singularity", &config, &report)?,
        OutputFormat::Csv => {
            let mut csv = Csv::new(&[
                "n_scale",
                "epsilon",
                "s",
                "c_constant",
                "b_measure",
                "interval_count",
                "truncation",
                "trials",
                "hits",
                "mc_prob",
                "stderr",
                "max_bin_mass",
            ]);
            csv.row(&[
                CsvField::U(report.n_scale),
                CsvField::F(report.epsilon),
                CsvField::F(report.s),
                CsvField::F(report.c_constant),
                CsvField::F(report.b_measure),
                CsvField::U(report.interval_count),
                CsvField::U(report.truncation),
                CsvField::U(report.trials),
                CsvField::U(report.hits),
                CsvField::F(report.mc_prob),
                CsvField::F(report.stderr),
                CsvField::F(report.max_bin_mass),
            ]);
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

// ============================================================================
// ap-check
// ============================================================================

#[derive(Debug, Serialize)]
struct ApCheckConfig {
    family: &'static str,
    limit: u64,
}

/// The coefficient function of a named family.
pub fn ap_family_fn(family: ApFamily) -> fn(u64) -> f64 {
    match family {
        ApFamily::PInverse => |p| 1.0 / p as f64,
        ApFamily::Zero => |_| 0.0,
        ApFamily::One => |_| 1.0,
        ApFamily::LogInverse => |p| 1.0 / (p as f64).ln(),
    }
}

fn ap_family_name(family: ApFamily) -> &'static str {
    match family {
        ApFamily::PInverse => "p-inverse",
        ApFamily::Zero => "zero",
        ApFamily::One => "one",
        ApFamily::LogInverse => "log-inverse",
    }
}

pub fn ap_check(args: &ApCheckArgs) -> Result<()> {
    let pt = primes::sieve(args.limit)?;
    let report = primes::general_ap_check(&pt, ap_family_fn(args.family))?;
    let config = ApCheckConfig {
        family: ap_family_name(args.family),
        limit: args.limit,
    };
    let text = match args.out.format {
        OutputFormat::Json => envelope_json("ap-check", &config, &report)?,
        OutputFormat::Csv => {
            let mut csv = Csv::new(&[
                "k",
                "divergence_partial",
                "divergence_increment",
                "abs_increment",
            ]);
            for d in &report.decades {
                csv.row(&[
                    CsvField::U(u64::from(d.k)),
                    CsvField::F(d.divergence_partial),
                    CsvField::F(d.divergence_increment),
                    CsvField::F(d.abs_increment),
                ]);
            }
            csv.into_string()
        }
    };
    emit(&args.out.out, &text)
}

/// Absolute output path helper for tests: `dir.join(name)` as `PathBuf`.
pub fn out_path(dir: &std::path::Path, name: &str) -> PathBuf {
    dir.join(name)
}

//! The acceptance checklist: eleven end-to-end checks over the whole
//! workspace, runnable both as `drs verify` and as the `acceptance`
//! integration test suite.
//!
//! Each item exercises one pillar — closed-form constants, martingale
//! means, sampled densities, exact small laws, the two characteristic-
//! function routes, decay fits, oscillatory-sum identities and bounds,
//! dyadic block laws, the prime covering experiment, prime tables, and
//! bitwise reproducibility of the binary — and reports a single verdict
//! with the measured numbers and its wall-clock budget.
//!
//! Items are serialized through a process-wide gate so their time budgets
//! stay meaningful when the test harness runs them from several threads.
//! All tolerances, seeds and reference constants here are frozen; loosening
//! them to make a failing item pass is never acceptable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use drs_core::charfn::{self, DecayKind, PhaseFn, TruncationPolicy};
use drs_core::exact::AtomicDistribution;
use drs_core::numerics::{fit_slope, CompensatedSum, RngStream};
use drs_core::primes;
use drs_core::records;
use drs_core::sampler;
use drs_core::series::{DyadicBlock, SeriesParams};

use crate::commands;

/// Number of checklist items.
pub const ITEM_COUNT: u32 = 11;

/// Wall-clock budget per item, in seconds (same order as the items).
pub const BUDGETS: [f64; ITEM_COUNT as usize] = [
    5.0, 30.0, 180.0, 10.0, 10.0, 120.0, 60.0, 5.0, 180.0, 120.0, 60.0,
];

/// The checklist serialization gate (budgets assume exclusive use of the
/// worker pool).
static GATE: Mutex<()> = Mutex::new(());

/// Verdict of one checklist item.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// 1-based item index.
    pub index: u32,
    /// Short item name.
    pub name: &'static str,
    /// Overall verdict, including the time budget.
    pub pass: bool,
    /// Measured values and sub-verdicts.
    pub detail: String,
    /// Wall-clock seconds spent.
    pub seconds: f64,
}

impl Outcome {
    /// One printable verdict line.
    pub fn line(&self) -> String {
        format!(
            "[{:>2}/{}] {}  {:<28} ({:>7.2}s)  {}",
            self.index,
            ITEM_COUNT,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Runs one item body under the gate, folding its wall-clock budget into
/// the verdict. Errors from the body become failing outcomes.
fn run_item(
    index: u32,
    name: &'static str,
    body: impl FnOnce() -> anyhow::Result<(bool, String)>,
) -> Outcome {
    let _guard = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (mut pass, mut detail) = match body() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e:#}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget = BUDGETS[(index - 1) as usize];
    if seconds > budget {
        pass = false;
        detail = format!("over budget ({seconds:.1}s > {budget:.0}s); {detail}");
    }
    Outcome {
        index,
        name,
        pass,
        detail,
        seconds,
    }
}

/// Runs one item by 1-based index; `None` if the index is out of range.
///
/// `bin` is the `drs` binary used by the process-spawning items (3, 11).
pub fn run_one(index: u32, bin: &Path) -> Option<Outcome> {
    Some(match index {
        1 => item_01_second_moment_constants(),
        2 => item_02_martingale_mean(),
        3 => item_03_density_histograms(bin),
        4 => item_04_interval_scaling(),
        5 => item_05_charfn_dual_route(),
        6 => item_06_decay_laws(),
        7 => item_07_oscillatory_sums(),
        8 => item_08_block_hit_laws(),
        9 => item_09_covering_experiment(),
        10 => item_10_prime_tables(),
        11 => item_11_reproducibility(bin),
        _ => return None,
    })
}

/// Runs the whole checklist in order.
pub fn run_all(bin: &Path) -> Vec<Outcome> {
    (1..=ITEM_COUNT).map(|i| run_one(i, bin).unwrap()).collect()
}

// ============================================================================
// Item 1: second-moment constants
// ============================================================================

/// The limiting second moment of the record martingale, to the digits the
/// checklist pins down.
const SECOND_MOMENT_REF: f64 = 0.29667513474359;

/// Product at 10^6 terms and the closed-form limit both land on the
/// reference constant to 1e-9, and the gamma-function route agrees with
/// the product route to 1e-10 at every probed level.
pub fn item_01_second_moment_constants() -> Outcome {
    run_item(1, "second-moment constants", || {
        let product = records::second_moment_product(1_000_000)?;
        let limit = records::limit_constant();
        let dev_product = (product - SECOND_MOMENT_REF).abs();
        let dev_limit = (limit - SECOND_MOMENT_REF).abs();

        let mut max_route_gap = 0.0f64;
        let levels = (1u64..=100).chain([1_000, 10_000]);
        for n in levels {
            let gamma = records::second_moment_gamma(n)?;
            let prod = records::second_moment_product(n)?;
            max_route_gap = max_route_gap.max((gamma - prod).abs());
        }

        let pass = dev_product <= 1e-9 && dev_limit <= 1e-9 && max_route_gap <= 1e-10;
        Ok((
            pass,
            format!(
                "product(1e6) off by {dev_product:.2e}, limit off by {dev_limit:.2e}, \
                 max gamma-vs-product gap {max_route_gap:.2e}"
            ),
        ))
    })
}

// ============================================================================
// Item 2: martingale mean
// ============================================================================

/// The analytic mean of the scaled record martingale is exactly 1/2 at
/// every level up to 10^4, and a seeded Monte Carlo run at level 100
/// reproduces 1/2 within four standard errors.
pub fn item_02_martingale_mean() -> Outcome {
    run_item(2, "martingale mean", || {
        let mut max_dev = 0.0f64;
        for n in 1..=10_000u64 {
            max_dev = max_dev.max((records::mean_v_analytic(n)? - 0.5).abs());
        }

        let n = 100u64;
        let trials = 1_000_000usize;
        let params = SeriesParams::new(1.0, 1.0)?;
        let base = RngStream::new(2, 0);
        let n_chunks = trials.div_ceil(sampler::BATCH_CHUNK);
        let partials = (0..n_chunks)
            .into_par_iter()
            .map(|c| -> drs_core::Result<f64> {
                let mut rng = base.substream(c as u64);
                let len = sampler::BATCH_CHUNK.min(trials - c * sampler::BATCH_CHUNK);
                let mut acc = CompensatedSum::new();
                for _ in 0..len {
                    let path = sampler::sample_indicators(&params, n, &mut rng)?;
                    acc.add(records::v_n_realization(&path)?);
                }
                Ok(acc.value())
            })
            .collect::<drs_core::Result<Vec<f64>>>()?;
        let mc_mean = partials.iter().sum::<f64>() / trials as f64;

        let variance = records::second_moment_product(n)? - 0.25;
        let sigma = (variance / trials as f64).sqrt();
        let mc_dev = (mc_mean - 0.5).abs();

        let pass = max_dev <= 1e-12 && mc_dev <= 4.0 * sigma;
        Ok((
            pass,
            format!(
                "max analytic deviation {max_dev:.2e} (n <= 1e4); \
                 MC mean {mc_mean:.6} at n=100 is {:.2} sigma from 1/2",
                mc_dev / sigma
            ),
        ))
    })
}

// ============================================================================
// Item 3: density histograms
// ============================================================================

/// Runs the binary's `figure1` at the default parameters at two bin
/// widths: every histogram integrates to one and starts at the left edge
/// of the support, and refinement separates the bounded-density exponent
/// from the atomic one.
pub fn item_03_density_histograms(bin: &Path) -> Outcome {
    run_item(3, "density histograms", || {
        let tmp = tempfile::tempdir()?;
        let coarse = run_cli(
            bin,
            tmp.path(),
            &["figure1", "--bins", "0.001", "--out", "coarse"],
            &[],
        )?;
        let fine = run_cli(
            bin,
            tmp.path(),
            &["figure1", "--bins", "0.0001", "--out", "fine"],
            &[],
        )?;
        let coarse: serde_json::Value = serde_json::from_str(&coarse)?;
        let fine: serde_json::Value = serde_json::from_str(&fine)?;

        let mut max_integral_dev = 0.0f64;
        let mut max_edge_dev = 0.0f64;
        for (doc, width) in [(&coarse, 1e-3), (&fine, 1e-4)] {
            for curve in doc["result"].as_array().expect("curve array") {
                let integral = curve["integral"].as_f64().expect("integral");
                let start = curve["support_start"].as_f64().expect("support_start");
                max_integral_dev = max_integral_dev.max((integral - 1.0).abs());
                max_edge_dev = max_edge_dev.max(((start - 1.0) / width).abs());
            }
        }

        let peak = |doc: &serde_json::Value, s: f64| -> f64 {
            doc["result"]
                .as_array()
                .expect("curve array")
                .iter()
                .find(|c| c["s"].as_f64() == Some(s))
                .expect("curve present")["max_density"]
                .as_f64()
                .expect("max_density")
        };
        let ratio_smooth = peak(&fine, 0.6) / peak(&coarse, 0.6);
        let ratio_atomic = peak(&fine, 2.2) / peak(&coarse, 2.2);

        // independent re-integration of one written CSV
        let csv = fs::read_to_string(tmp.path().join("coarse/figure1_s1.0.csv"))?;
        let mut csv_integral = 0.0f64;
        for line in csv.lines().skip(1) {
            let (_, density) = line.split_once(',').expect("two CSV columns");
            csv_integral += density.parse::<f64>()? * 1e-3;
        }
        let csv_dev = (csv_integral - 1.0).abs();

        let integral_ok = max_integral_dev <= 1e-9 && csv_dev <= 1e-9;
        let edge_ok = max_edge_dev <= 1.0;
        let smooth_ok = ratio_smooth < 1.5;
        let atomic_ok = ratio_atomic > 2.0;
        let pass = integral_ok && edge_ok && smooth_ok && atomic_ok;
        Ok((
            pass,
            format!(
                "integrals off by <= {max_integral_dev:.1e} (CSV {csv_dev:.1e}) [ok: {integral_ok}]; \
                 support edge within {max_edge_dev:.2} bins of 1.0 [ok: {edge_ok}]; \
                 peak refinement ratio {ratio_smooth:.2} at s=0.6 [ok: {smooth_ok}] \
                 vs {ratio_atomic:.2} at s=2.2 [ok: {atomic_ok}]"
            ),
        ))
    })
}

// ============================================================================
// Item 4: left-edge interval scaling
// ============================================================================

/// Slope of `ln P(S in [1, 1+eps])` against `ln eps` for the enumerated
/// 20-term law at s=2, frozen from an independent exact-arithmetic run.
const INTERVAL_SLOPE_REF: f64 = 0.40775644683590745;

/// The exact enumerated law at s=2 yields a left-edge interval scaling
/// exponent of 1/2 up to 0.1, and reproduces the frozen reference slope.
pub fn item_04_interval_scaling() -> Outcome {
    run_item(4, "left-edge interval scaling", || {
        let params = SeriesParams::new(2.0, 1.0)?;
        let dist = AtomicDistribution::enumerate(&params, 20)?;
        let mut pts = Vec::new();
        let mut p_by_k = Vec::new();
        for k in 4..=10u32 {
            let eps = 0.5f64.powi(k as i32);
            let p = dist.interval_prob(1.0, 1.0 + eps)?;
            pts.push((eps.ln(), p.ln()));
            p_by_k.push(p);
        }
        let fit = fit_slope(&pts)?;
        let dev_half = (fit.slope - 0.5).abs();
        let dev_ref = (fit.slope - INTERVAL_SLOPE_REF).abs();

        // below the atom gap the interval holds a single atom: identical mass
        let floor_exact = p_by_k[5] == p_by_k[6];

        let pass = dev_half <= 0.1 && dev_ref <= 1e-9 && floor_exact;
        Ok((
            pass,
            format!(
                "slope {:.6} ({dev_half:.3} from 1/2, {dev_ref:.1e} from frozen ref), \
                 single-atom floor exact: {floor_exact}",
                fit.slope
            ),
        ))
    })
}

// ============================================================================
// Item 5: characteristic-function dual route
// ============================================================================

/// The enumerated characteristic function and the infinite-product
/// formula agree to 1e-12 across truncations, frequencies and parameter
/// pairs.
pub fn item_05_charfn_dual_route() -> Outcome {
    run_item(5, "char fn dual route", || {
        let cases = [(1.0, 1.0), (0.6, 1.0), (2.2, 1.0), (1.0, 0.5)];
        let ts = [0.1, 1.0, 10.0, 100.0, 1000.0];
        let mut max_gap = 0.0f64;
        let mut checked = 0u64;
        for (s, beta) in cases {
            let params = SeriesParams::new(s, beta)?;
            for n in 1..=20u64 {
                let dist = AtomicDistribution::enumerate(&params, n)?;
                for t in ts {
                    let enumerated = dist.exact_charfn(t).norm_sqr();
                    let (product, _) = charfn::modulus_sq_product(&params, t, n)?;
                    max_gap = max_gap.max((enumerated - product).abs());
                    checked += 1;
                }
            }
        }
        let pass = max_gap <= 1e-12;
        Ok((
            pass,
            format!("max |enumerated - product| = {max_gap:.2e} over {checked} cases"),
        ))
    })
}

// ============================================================================
// Item 6: modulus decay laws
// ============================================================================

/// Dense-regime power-law slope, its one-sided envelope, and the
/// sparse-regime stretched-exponential exponent.
pub fn item_06_decay_laws() -> Outcome {
    run_item(6, "modulus decay laws", || {
        // (a) power law at s = 1, beta = 1 over [1e2, 1e6]; 24 points per
        // decade so the OLS averages over the genuine anti-resonant dips
        // of the small-n factors (the grid is frozen, the fit is exact)
        let p_dense = SeriesParams::new(1.0, 1.0)?;
        let grid = charfn::log_grid(1e2, 1e6, 24)?;
        let fit = charfn::decay_fit(&p_dense, &grid, commands::DECAY_FIT_TOL)?;
        let slope = fit.fit.slope;
        let slope_ok = fit.kind == DecayKind::PowerLaw && (-1.3..=-0.85).contains(&slope);

        // One-sided envelope. The modulus has genuine upward spikes at
        // frequencies near integers with many small divisors (every factor
        // with n | t sits at its maximum), and the decade grid avoids
        // integers by construction, so the envelope constant is calibrated
        // over all integer frequencies of the first decade — the spike
        // tops — alongside the grid's own first-decade points.
        let policy = TruncationPolicy {
            tol: commands::DECAY_FIT_TOL,
            n_cap: 1 << 28,
        };
        let t_calib: Vec<f64> = (100..=1000).map(f64::from).collect();
        let calib_profile = charfn::profile(&p_dense, &t_calib, policy)?;
        let profile = charfn::profile(&p_dense, &grid, policy)?;
        let pts: Vec<(f64, f64)> = calib_profile
            .points
            .iter()
            .chain(profile.points.iter())
            .map(|p| (p.t, 0.5 * p.log_modulus_sq))
            .collect();
        let envelope = charfn::power_envelope_check(&pts, -1.0 + 0.1, 1e3)?;
        let envelope_ok = envelope.violations == 0;

        // (b) stretched exponential at s = 1, beta = 1/2 over [1e4, 1e9]
        let p_sparse = SeriesParams::new(1.0, 0.5)?;
        let grid_sparse = charfn::log_grid(1e4, 1e9, 4)?;
        let fit_sparse = charfn::decay_fit(&p_sparse, &grid_sparse, commands::DECAY_FIT_TOL)?;
        let stretch = fit_sparse.fit.slope;
        let stretch_ok = fit_sparse.kind == DecayKind::StretchedExponential
            && (stretch - 0.25).abs() <= 0.1;

        let pass = slope_ok && envelope_ok && stretch_ok;
        Ok((
            pass,
            format!(
                "power slope {slope:.4} [ok: {slope_ok}], envelope violations \
                 {}/{} (max excess {:.1e}) [ok: {envelope_ok}], stretched exponent \
                 {stretch:.4} [ok: {stretch_ok}]",
                envelope.violations, envelope.checked, envelope.max_excess
            ),
        ))
    })
}

// ============================================================================
// Item 7: oscillatory sums and bounds
// ============================================================================

/// Summation by parts agrees with direct weighted sums to 1e-11 on a
/// 100-case sweep, and the oscillation bound dominates every direct block
/// sum in the decade sweep.
pub fn item_07_oscillatory_sums() -> Outcome {
    run_item(7, "oscillatory sums and bounds", || {
        let s = 1.0;
        let mut max_gap = 0.0f64;
        let mut cases = 0u32;
        for beta in [1.0, 0.5] {
            for exp10 in 2..=6u32 {
                let t = 10f64.powi(exp10 as i32);
                for k in 0..=9u32 {
                    let block = DyadicBlock { k };
                    let by_parts = charfn::exp_sum_by_parts(t, s, beta, &block);
                    let phase = PhaseFn::Power { t, s };
                    // independent weight formulas: exact reciprocals, not powf
                    let direct = if beta == 1.0 {
                        let w = |l: u64| {
                            let lf = l as f64;
                            1.0 / lf - 1.0 / (lf * lf)
                        };
                        charfn::exp_sum_direct(&phase, block.lo(), block.hi(), Some(&w))
                    } else {
                        let w = |l: u64| {
                            let lf = l as f64;
                            1.0 / lf.sqrt() - 1.0 / lf
                        };
                        charfn::exp_sum_direct(&phase, block.lo(), block.hi(), Some(&w))
                    };
                    max_gap = max_gap.max((by_parts - direct).norm());
                    cases += 1;
                }
            }
        }
        let identity_ok = cases == 100 && max_gap <= 1e-11;

        let sweep = commands::vdc_sweep_report(1.0, 1e3, 1e9)?;
        let sweep_ok = sweep.violations == 0;

        let pass = identity_ok && sweep_ok;
        Ok((
            pass,
            format!(
                "summation-by-parts gap {max_gap:.2e} over {cases} cases; \
                 bound sweep {} violations / {} cases (max ratio {:.3})",
                sweep.violations, sweep.cases, sweep.max_ratio
            ),
        ))
    })
}

// ============================================================================
// Item 8: dyadic block hit laws
// ============================================================================

/// Single-hit probabilities stay above (log 2)/2 on the first 21 blocks,
/// and the conditional hit law matches brute-force conditioning to 1e-12
/// on blocks up to 4096 integers.
pub fn item_08_block_hit_laws() -> Outcome {
    run_item(8, "dyadic block hit laws", || {
        let params = SeriesParams::new(1.0, 1.0)?;
        let floor = 0.5 * std::f64::consts::LN_2;
        let mut min_single = f64::INFINITY;
        for k in 0..=20u32 {
            min_single = min_single.min(sampler::block_single_hit_prob(&params, k)?);
        }
        let single_ok = min_single >= floor;

        let mut max_gap = 0.0f64;
        for k in 0..=12u32 {
            let cond = sampler::block_conditional(k)?;
            let probs = cond.probs()?;
            let block = DyadicBlock { k };
            let ns: Vec<u64> = block.range().collect();
            // brute force: for each n multiply out all other factors directly
            let mut weights = Vec::with_capacity(ns.len());
            for &n in &ns {
                let mut prod = 1.0f64;
                for &m in &ns {
                    if m != n {
                        prod *= 1.0 - 1.0 / m as f64;
                    }
                }
                weights.push(prod / n as f64);
            }
            let z: f64 = weights.iter().sum();
            for (i, w) in weights.iter().enumerate() {
                max_gap = max_gap.max((probs[i] - w / z).abs());
            }
        }
        let cond_ok = max_gap <= 1e-12;

        let pass = single_ok && cond_ok;
        Ok((
            pass,
            format!(
                "min single-hit prob {min_single:.6} vs floor {floor:.6}; \
                 brute-force conditional gap {max_gap:.2e} (k <= 12)"
            ),
        ))
    })
}

// ============================================================================
// Item 9: prime covering experiment
// ============================================================================

/// Frozen Monte Carlo floor for the hit probability of the covering set.
const MC_PROB_FLOOR: f64 = 0.02;

/// Frozen cap on the largest single-bin mass at width 1e-9.
const ATOM_MASS_CAP: f64 = 0.01;

/// The covering set shrinks by an order of magnitude from scale 1e4 to
/// 1e6 while the sampled series keeps landing in it with probability
/// above the frozen floor; the sampled law must also show no heavy atom
/// at bin width 1e-9.
pub fn item_09_covering_experiment() -> Outcome {
    run_item(9, "prime covering experiment", || {
        let mut reports = Vec::new();
        for n_scale in [10_000u64, 100_000, 1_000_000] {
            let rng = RngStream::new(9, 0);
            reports.push(primes::singularity_experiment(1.0, 0.5, n_scale, 1_000_000, &rng)?);
        }
        let shrink = reports[0].b_measure / reports[2].b_measure;
        let shrink_ok = shrink >= 10.0;
        let min_prob = reports.iter().map(|r| r.mc_prob).fold(f64::INFINITY, f64::min);
        let prob_ok = min_prob >= MC_PROB_FLOOR;
        let max_atom = reports
            .iter()
            .map(|r| r.max_bin_mass)
            .fold(0.0f64, f64::max);
        let atom_ok = max_atom <= ATOM_MASS_CAP;

        let pass = shrink_ok && prob_ok && atom_ok;
        Ok((
            pass,
            format!(
                "measure shrink x{shrink:.1} [ok: {shrink_ok}]; min hit prob {min_prob:.4} \
                 vs floor {MC_PROB_FLOOR} [ok: {prob_ok}]; max bin mass {max_atom:.4} \
                 vs cap {ATOM_MASS_CAP} [ok: {atom_ok}]"
            ),
        ))
    })
}

// ============================================================================
// Item 10: prime tables
// ============================================================================

/// The normalized Mertens product improves monotonically decade over
/// decade up to 1e8, and the squarefree density at 1e7 sits within 1e-3
/// of 6/pi^2.
pub fn item_10_prime_tables() -> Outcome {
    run_item(10, "prime tables", || {
        let pt = primes::sieve(100_000_000)?;
        let rows = commands::mertens_decades(&pt, 100_000_000)?;
        let mut monotone = rows.len() == 6;
        for w in rows.windows(2) {
            monotone &= w[1].abs_gap < w[0].abs_gap;
        }
        let density = primes::squarefree_density(&pt, 10_000_000)?;
        let expected = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        let density_dev = (density - expected).abs();
        let density_ok = density_dev <= 1e-3;

        let pass = monotone && density_ok;
        let gaps: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.abs_gap)).collect();
        Ok((
            pass,
            format!(
                "Mertens gaps per decade [{}] monotone: {monotone}; \
                 squarefree density off by {density_dev:.2e}",
                gaps.join(", ")
            ),
        ))
    })
}

// ============================================================================
// Item 11: bitwise reproducibility
// ============================================================================

/// Every seeded command, rerun with the same flags, writes byte-identical
/// output, and forcing 1 vs 8 worker threads (flag or environment) cannot
/// change a single byte.
pub fn item_11_reproducibility(bin: &Path) -> Outcome {
    run_item(11, "bitwise reproducibility", || {
        let tmp = tempfile::tempdir()?;
        // (command label, argv, files to compare)
        let cases: [(&str, Vec<&str>, Vec<&str>); 4] = [
            (
                "sample",
                vec![
                    "sample", "--samples", "1000", "--n-trunc", "1000", "--seed", "7", "--out",
                    "out.csv", "--format", "csv",
                ],
                vec!["out.csv"],
            ),
            (
                "figure1",
                vec![
                    "figure1", "--samples", "20000", "--n-trunc", "1000", "--seed", "3", "--out",
                    "fig",
                ],
                vec![
                    "fig/figure1_s0.6.csv",
                    "fig/figure1_s1.0.csv",
                    "fig/figure1_s1.4.csv",
                    "fig/figure1_s2.2.csv",
                ],
            ),
            (
                "records",
                vec![
                    "records", "--n-trunc", "50", "--samples", "20000", "--seed", "5", "--out",
                    "rec.json",
                ],
                vec!["rec.json"],
            ),
            (
                "singularity",
                vec![
                    "singularity", "--n-trunc", "1000", "--samples", "20000", "--seed", "11",
                    "--out", "sing.csv", "--format", "csv",
                ],
                vec!["sing.csv"],
            ),
        ];

        let mut compared = 0u32;
        for (label, argv, files) in &cases {
            // runs: twice on one thread, once on eight; the last case takes
            // its worker count from the environment instead of the flag
            let mut stdouts = Vec::new();
            for (run, threads) in [("r1", Some(1)), ("r2", Some(1)), ("r8", Some(8))] {
                let dir = tmp.path().join(format!("{label}-{run}"));
                fs::create_dir_all(&dir)?;
                let mut args: Vec<String> = argv.iter().map(|s| s.to_string()).collect();
                let mut envs: Vec<(&str, String)> = Vec::new();
                if *label == "singularity" {
                    envs.push(("DRS_THREADS", threads.unwrap().to_string()));
                } else {
                    args.push("--threads".to_string());
                    args.push(threads.unwrap().to_string());
                }
                let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
                let env_refs: Vec<(&str, &str)> =
                    envs.iter().map(|(k, v)| (*k, v.as_str())).collect();
                stdouts.push((dir.clone(), run_cli(bin, &dir, &arg_refs, &env_refs)?));
            }
            let (base_dir, base_out) = &stdouts[0];
            for (dir, out) in &stdouts[1..] {
                if out != base_out {
                    return Ok((false, format!("{label}: stdout differs between runs")));
                }
                for file in files {
                    let a = fs::read(base_dir.join(file))?;
                    let b = fs::read(dir.join(file))?;
                    if a != b {
                        return Ok((false, format!("{label}: {file} differs between runs")));
                    }
                    compared += 1;
                }
            }
        }
        Ok((
            true,
            format!(
                "4 seeded commands, 3 runs each (1/1/8 threads): all stdout \
                 and {compared} file comparisons byte-identical"
            ),
        ))
    })
}

// ============================================================================
// Helpers
// ============================================================================

/// Runs the binary with `args` in `dir`, returning captured stdout.
///
/// `DRS_THREADS` is always cleared first so only the explicit settings of
/// the checklist apply.
fn run_cli(bin: &Path, dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> anyhow::Result<String> {
    let output = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .env_remove("DRS_THREADS")
        .envs(envs.iter().copied())
        .output()?;
    if !output.status.success() {
        anyhow::bail!(
            "`drs {}` failed with {}: {}",
            args.join(" "),
            output.status,
            String::from_utf8_lossy(&output.stderr)
        );
    }
    Ok(String::from_utf8(output.stdout)?)
}

/// Resolves the path of the `drs` binary for in-process checklist runs.
pub fn own_binary() -> anyhow::Result<PathBuf> {
    Ok(std::env::current_exe()?)
}

//! The analytic engine: certified evaluation of the squared Fourier
//! modulus, oscillatory exponential sums over dyadic blocks, van der
//! Corput-type bounds, decay-exponent fits, and Sobolev energies.
//!
//! # The product formula
//!
//! For independent `I_n ~ Bernoulli(p_n)` with `p_n = n^(-beta)` and term
//! values `v_n`, the squared modulus of `E exp(-2 pi i t S)` factorizes:
//!
//! ```text
//!     |phi(t)|^2 = prod_n ( 1 - 4 p_n (1 - p_n) sin^2(pi t v_n) )
//! ```
//!
//! (equivalently `1 - 2 p + 2 p^2 + 2 p (1-p) cos(2 pi t v)`). Each factor
//! lies in `[(1 - 2 p_n)^2, 1]`; a factor can vanish exactly when
//! `p_n = 1/2` and `t v_n` is a half-integer.
//!
//! # Truncation certificates
//!
//! Discarding `n > N` removes `-sum_{n>N} ln(1 - x_n)` from the log of the
//! product, where `x_n = 4 p (1-p) sin^2(pi t v_n) <= min(4 p_n,
//! (2 pi t)^2 n^(-2s-beta))` by `sin^2(pi y) <= min(1, (pi y)^2)`. The
//! reported bound is `(2 pi t)^2 * tail(2s + beta, N)` (exact head plus
//! integral tail) inflated by the exact slack of `-ln(1-x) <= x * slack`,
//! `slack = -ln(1-x_max)/x_max`. It is infinite when no certificate exists
//! at this `N` (the slack blows up), signalling "increase N".
//!
//! # Provided operations
//!
//! | Item                    | Purpose                                        |
//! |-------------------------|------------------------------------------------|
//! | [`modulus_sq_product`]  | `\|phi(t)\|^2` with certified truncation error |
//! | [`auto_truncation`]     | smallest power-of-two `N` meeting a tolerance  |
//! | [`profile`]             | parallel evaluation over a frequency grid      |
//! | [`PhaseFn`]             | phase `t/x^s` or `-t ln(1 - 1/x)`              |
//! | [`exp_sum_direct`]      | weighted exponential sum over an interval      |
//! | [`exp_sum_by_parts`]    | the same sum via Abel summation on a block     |
//! | [`VdcParams`], [`vdc_bound`] | van der Corput/Weyl bound `c (F^(1/(4Q-2)) N^(1-(q+2)/(4Q-2)) + N/F)` |
//! | [`decay_fit`]           | fitted decay exponent (power law / stretched)  |
//! | [`sobolev_energy`]      | `2 * int_0^T \|phi\|^2 t^(2 gamma) dt`         |
//! | [`power_envelope_check`]| calibrated pointwise envelope verification     |
//! | [`log_grid`]            | log-spaced grid at bin midpoints               |
//!
//! # Design notes
//!
//! - Products are accumulated as compensated sums of `ln(1 - x_n)`; values
//!   near `10^-thousands` (sparse regimes at large `t`) stay representable
//!   on the log scale.
//! - Phases `t * v mod 1` are reduced with an error-free product, keeping
//!   `sin^2` arguments accurate at `t` where `t * v` has consumed most of
//!   the mantissa.
//! - `log_grid` places points at log-bin midpoints, so grids never contain
//!   round powers of ten: integer frequencies resonate with integer terms
//!   (`cos(2 pi t / n) = 1` whenever `n | t`) and would bias decay fits
//!   upward at exactly the grid points.
//! - Negative `t` maps to `|t|` (the modulus is even).

use crate::error::{Error, Result};
use crate::numerics::{fit_slope, two_prod, CompensatedSum, SlopeFit};
use crate::series::{
    make_blocks, neg_power, power_tail_integral, DyadicBlock, SeriesParams, SeriesVariant,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Hard cap on product loop length: beyond ~2.7e8 factors a single point
/// stops being interactive.
const PRODUCT_LOOP_CAP: u64 = 1 << 28;

/// Exponent cap for [`auto_truncation`] (N = 2^j search space).
const AUTO_TRUNC_EXP_CAP: u32 = 34;

// ============================================================================
// Product evaluation
// ============================================================================

/// Truncation policy for grid evaluations: target certified tolerance on
/// `ln |phi|^2` and a cap on the truncation level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncationPolicy {
    /// Target bound on the certified log-scale truncation error.
    pub tol: f64,
    /// Upper bound on the truncation level `N`.
    pub n_cap: u64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tol: 1e-6,
            n_cap: 1 << 26,
        }
    }
}

/// One evaluated grid point of a modulus profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CharFnPoint {
    /// Frequency.
    pub t: f64,
    /// `|phi(t)|` (not squared).
    pub modulus: f64,
    /// `ln |phi(t)|^2`; `-inf` when a factor vanishes exactly.
    pub log_modulus_sq: f64,
    /// Certified bound on the log-scale truncation error of `modulus^2`.
    pub trunc_error: f64,
    /// Truncation level used.
    pub n_used: u64,
}

/// A profile of the modulus over a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct CharFnProfile {
    /// Parameters of the underlying series.
    pub params: SeriesParams,
    /// Evaluated points, in grid order.
    pub points: Vec<CharFnPoint>,
}

fn require_product_regime(params: &SeriesParams) -> Result<()> {
    if params.variant() == SeriesVariant::PrimesOnly {
        return Err(Error::Unsupported(
            "the product over a prime index set requires a prime table; only the dense variants \
             are supported here"
                .to_string(),
        ));
    }
    if params.s() + params.beta() <= 1.0 {
        return Err(Error::Domain(format!(
            "the series diverges for s + beta = {} <= 1; its law has no Fourier transform",
            params.s() + params.beta()
        )));
    }
    Ok(())
}

/// `sin^2(pi * frac(t * v))` with the phase reduced by an error-free
/// product, plus the factor deficit `x = 4 p (1-p) sin^2`.
#[inline]
fn factor_deficit(params: &SeriesParams, t: f64, n: u64) -> f64 {
    let v = params.term_value(n);
    let p = params.term_probability(n);
    let (prod, err) = two_prod(t, v);
    let frac = prod.fract() + err;
    let sin = (PI * frac).sin();
    4.0 * p * (1.0 - p) * sin * sin
}

/// `ln` of the squared-modulus product restricted to `lo..=hi`, with no
/// truncation certificate. `-inf` when a factor vanishes exactly.
fn log_modulus_sq_over(params: &SeriesParams, t: f64, lo: u64, hi: u64) -> f64 {
    let mut acc = CompensatedSum::new();
    for n in lo.max(params.first_index())..=hi {
        let x = factor_deficit(params, t, n);
        if x >= 1.0 {
            return f64::NEG_INFINITY;
        }
        acc.add((-x).ln_1p());
    }
    acc.value()
}

/// Certified bound on the discarded log-tail `|ln prod_{n>N} factor_n|`.
/// Infinite when the per-factor deficit cannot be bounded away from 1.
fn truncation_certificate(params: &SeriesParams, t: f64, n_from: u64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let a = 2.0 * params.s() + params.beta();
    debug_assert!(a > 1.0, "guaranteed by s + beta > 1 and s > 0");
    let two_pi_t_sq = (2.0 * PI * t) * (2.0 * PI * t);
    // per-factor deficit bound at the first discarded index, decreasing in n
    let nf = n_from + 1;
    let x_max = (4.0 * neg_power(nf, params.beta())).min(two_pi_t_sq * neg_power(nf, a));
    if x_max >= 1.0 {
        return f64::INFINITY;
    }
    // -ln(1-x) <= x * slack for all x <= x_max
    let slack = if x_max > 0.0 {
        -(-x_max).ln_1p() / x_max
    } else {
        1.0
    };
    // exact head + integral tail of sum_{n > N} n^-a
    let head_end = (10 * n_from).min(n_from + (1 << 16));
    let mut head = CompensatedSum::new();
    for n in (n_from + 1)..=head_end {
        head.add(neg_power(n, a));
    }
    let tail = head.value() + power_tail_integral(a, head_end);
    slack * two_pi_t_sq * tail
}

/// `ln |phi(t)|^2` of the truncation at `N`, plus the certified bound on
/// the log of the discarded tail.
///
/// The log value is `-inf` when some factor vanishes exactly; the bound is
/// `+inf` when no certificate exists at this `N`.
///
/// # Errors
///
/// - `Error::Domain` for divergent parameters (`s + beta <= 1`) or `N < 1`.
/// - `Error::Unsupported` for the prime-indexed variant.
/// - `Error::Capacity` if `N` exceeds the product loop cap (2^28).
pub fn log_modulus_sq_product(params: &SeriesParams, t: f64, n_trunc: u64) -> Result<(f64, f64)> {
    require_product_regime(params)?;
    if n_trunc < 1 {
        return Err(Error::Domain(format!(
            "truncation level must be >= 1, got {n_trunc}"
        )));
    }
    if n_trunc > PRODUCT_LOOP_CAP {
        return Err(Error::Capacity(format!(
            "product over {n_trunc} factors exceeds the loop cap {PRODUCT_LOOP_CAP}"
        )));
    }
    let t = t.abs(); // |phi| is even in t
    let log_val = log_modulus_sq_over(params, t, 1, n_trunc);
    let cert = truncation_certificate(params, t, n_trunc);
    Ok((log_val, cert))
}

/// `|phi(t)|^2` of the truncation at `N` with its certified log-scale
/// truncation bound. See [`log_modulus_sq_product`] for error conditions.
pub fn modulus_sq_product(params: &SeriesParams, t: f64, n_trunc: u64) -> Result<(f64, f64)> {
    let (log_val, cert) = log_modulus_sq_product(params, t, n_trunc)?;
    Ok((log_val.exp(), cert))
}

/// Smallest `N = 2^j` whose certified truncation bound is `<= tol`, with
/// `N >= ceil(t^(1/s))` always (so the oscillatory range is fully inside
/// the retained product).
///
/// # Errors
///
/// - `Error::Domain` as for the product; also `tol <= 0`.
/// - `Error::Capacity` if no `N <= 2^34` certifies the tolerance.
pub fn auto_truncation(params: &SeriesParams, t: f64, tol: f64) -> Result<u64> {
    require_product_regime(params)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    let t = t.abs();
    let mut j: u32 = if t <= 1.0 {
        0
    } else {
        (t.ln() / params.s() / std::f64::consts::LN_2).ceil().max(0.0) as u32
    };
    loop {
        let n = 1u64 << j;
        if truncation_certificate(params, t, n) <= tol {
            return Ok(n);
        }
        j += 1;
        if j > AUTO_TRUNC_EXP_CAP {
            return Err(Error::Capacity(format!(
                "no truncation up to 2^{AUTO_TRUNC_EXP_CAP} certifies tolerance {tol} at t = {t}"
            )));
        }
    }
}

/// Evaluates the modulus over a frequency grid, in parallel, with
/// per-point automatic truncation under `policy`.
///
/// Points are independent pure functions of `(params, t)`; the output does
/// not depend on thread count. If the policy cap prevents reaching the
/// target tolerance at some `t`, that point carries its (larger) certified
/// bound rather than failing.
///
/// # Errors
///
/// As for [`modulus_sq_product`]; additionally `Error::Domain` for an
/// empty or non-finite grid.
pub fn profile(params: &SeriesParams, ts: &[f64], policy: TruncationPolicy) -> Result<CharFnProfile> {
    require_product_regime(params)?;
    if ts.is_empty() {
        return Err(Error::Domain("frequency grid is empty".to_string()));
    }
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("frequency grid contains non-finite values".to_string()));
    }
    let points: Vec<CharFnPoint> = ts
        .par_iter()
        .map(|&t_raw| {
            let t = t_raw.abs();
            let n_used = match auto_truncation(params, t, policy.tol) {
                Ok(n) => n.min(policy.n_cap),
                Err(_) => policy.n_cap,
            };
            let log_val = log_modulus_sq_over(params, t, 1, n_used);
            let cert = truncation_certificate(params, t, n_used);
            CharFnPoint {
                t,
                modulus: (0.5 * log_val).exp(),
                log_modulus_sq: log_val,
                trunc_error: cert,
                n_used,
            }
        })
        .collect();
    Ok(CharFnProfile {
        params: *params,
        points,
    })
}

/// Log-spaced grid between `t_min` and `t_max` with `ppd` points per
/// decade, placed at log-bin midpoints: `10^(log10(t_min) + (i + 1/2)/ppd)`.
///
/// Midpoint placement guarantees the grid avoids round powers of ten and,
/// for the usual decade-aligned `t_min`, integer frequencies in general —
/// see the module notes on resonance.
///
/// # Errors
///
/// `Error::Domain` unless `0 < t_min < t_max` and `ppd >= 1`.
pub fn log_grid(t_min: f64, t_max: f64, ppd: u32) -> Result<Vec<f64>> {
    if !(t_min > 0.0) || !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::Domain(format!(
            "grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if ppd < 1 {
        return Err(Error::Domain(format!("points per decade must be >= 1, got {ppd}")));
    }
    let e_min = t_min.log10();
    let e_max = t_max.log10();
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let e = e_min + (i as f64 + 0.5) / ppd as f64;
        if e > e_max {
            break;
        }
        out.push(10f64.powf(e));
        i += 1;
    }
    Ok(out)
}

// ============================================================================
// Oscillatory sums
// ============================================================================

/// Phase function for the exponential sums: either the power phase
/// `f(x) = t / x^s` or the log-ratio phase `f(x) = -t ln(1 - 1/x)` of the
/// product variant.
#[derive(Debug, Clone, Copy)]
pub enum PhaseFn {
    /// `f(x) = t / x^s`.
    Power {
        /// Frequency.
        t: f64,
        /// Decay exponent of the terms.
        s: f64,
    },
    /// `f(x) = -t ln(1 - 1/x)`.
    LogRatio {
        /// Frequency.
        t: f64,
    },
}

impl PhaseFn {
    /// The term value `v(n)` with `f(n) = t * v(n)`.
    #[inline]
    fn term(&self, n: u64) -> f64 {
        match *self {
            PhaseFn::Power { s, .. } => neg_power(n, s),
            PhaseFn::LogRatio { .. } => -(-1.0 / n as f64).ln_1p(),
        }
    }

    /// Frequency `t`.
    fn t(&self) -> f64 {
        match *self {
            PhaseFn::Power { t, .. } | PhaseFn::LogRatio { t } => t,
        }
    }

    /// `f(n) mod 1`, reduced with an error-free product.
    #[inline]
    pub fn phase_frac(&self, n: u64) -> f64 {
        let (prod, err) = two_prod(self.t(), self.term(n));
        prod.fract() + err
    }

    /// `exp(2 pi i f(n))`.
    #[inline]
    pub fn unit(&self, n: u64) -> Complex64 {
        let theta = 2.0 * PI * self.phase_frac(n);
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// `sum_{n=lo}^{hi} w(n) exp(2 pi i f(n))` by compensated summation;
/// unit weights when `weights` is `None`. Empty interval (`hi < lo`)
/// returns 0.
pub fn exp_sum_direct(
    phase: &PhaseFn,
    lo: u64,
    hi: u64,
    weights: Option<&dyn Fn(u64) -> f64>,
) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut n = lo;
    while n <= hi {
        let u = phase.unit(n);
        let w = weights.map_or(1.0, |f| f(n));
        re.add(w * u.re);
        im.add(w * u.im);
        if n == u64::MAX {
            break;
        }
        n += 1;
    }
    Complex64::new(re.value(), im.value())
}

/// The weighted exponential sum over a dyadic block with weights
/// `w_l = l^-beta - l^-2beta`, computed by Abel summation by parts:
///
/// ```text
///     sum_{l=lo}^{hi-1} (w_l - w_{l+1}) T_l  +  w_hi T_hi,
///     T_l = sum_{n=lo}^{l} exp(2 pi i t / n^s),
/// ```
///
/// which must agree with [`exp_sum_direct`] under the same weights — the
/// rearrangement is an exact identity, so the two routes differ only by
/// accumulated rounding.
pub fn exp_sum_by_parts(t: f64, s: f64, beta: f64, block: &DyadicBlock) -> Complex64 {
    let phase = PhaseFn::Power { t, s };
    let w = |l: u64| neg_power(l, beta) - neg_power(l, 2.0 * beta);
    let (lo, hi) = (block.lo(), block.hi());
    let mut t_re = CompensatedSum::new();
    let mut t_im = CompensatedSum::new();
    let mut acc_re = CompensatedSum::new();
    let mut acc_im = CompensatedSum::new();
    for l in lo..=hi {
        let u = phase.unit(l);
        t_re.add(u.re);
        t_im.add(u.im);
        let a_l = if l < hi { w(l) - w(l + 1) } else { w(hi) };
        acc_re.add(a_l * t_re.value());
        acc_im.add(a_l * t_im.value());
    }
    Complex64::new(acc_re.value(), acc_im.value())
}

// ============================================================================
// van der Corput bounds
// ============================================================================

/// Parameters of the iterated van der Corput/Weyl bound on
/// `|sum_{n in I} exp(2 pi i f(n))|` for intervals `I` inside `(N, 2N]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VdcParams {
    /// Differencing order (`Q = 2^q`).
    pub q: u32,
    /// Block base `N`.
    pub n_base: u64,
    /// Derivative scale `F = t / N^s`.
    pub f_ratio: f64,
    /// Calibration constant standing in for the bound's unspecified
    /// absolute constant; validated by sweep, default 8.
    pub c: f64,
}

impl VdcParams {
    /// Default calibration constant (validated by the domination sweep).
    pub const DEFAULT_C: f64 = 8.0;

    /// Builds parameters from the raw quantities.
    ///
    /// # Errors
    ///
    /// `Error::Domain` unless `F > 0` and `N >= 1`.
    pub fn new(q: u32, n_base: u64, f_ratio: f64) -> Result<Self> {
        if !(f_ratio > 0.0) || !f_ratio.is_finite() {
            return Err(Error::Domain(format!(
                "derivative scale F must be finite and > 0, got {f_ratio}"
            )));
        }
        if n_base < 1 {
            return Err(Error::Domain(format!("block base must be >= 1, got {n_base}")));
        }
        Ok(VdcParams {
            q,
            n_base,
            f_ratio,
            c: Self::DEFAULT_C,
        })
    }

    /// Builds parameters for the power phase `t / x^s` on the block with
    /// base `N = 2^k`: the derivative scale is `F = t / N^s`.
    pub fn for_power_phase(q: u32, k: u32, t: f64, s: f64) -> Result<Self> {
        if k > 62 {
            return Err(Error::Capacity(format!("block exponent {k} exceeds u64 range")));
        }
        let n = 1u64 << k;
        let f = t * neg_power(n, s);
        Self::new(q, n, f)
    }

    /// Replaces the calibration constant.
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// `Q = 2^q`.
    pub fn big_q(&self) -> f64 {
        (self.q as f64).exp2()
    }
}

/// The bound `c * (F^(1/(4Q-2)) * N^(1-(q+2)/(4Q-2)) + N / F)`.
///
/// `interval_len` is the length of the sub-interval the bound is compared
/// against; the estimate covers any interval inside `(N, 2N]`, so the
/// length must not exceed `N`.
pub fn vdc_bound(vp: &VdcParams, interval_len: u64) -> f64 {
    debug_assert!(
        interval_len >= 1 && interval_len <= vp.n_base,
        "bound applies to sub-intervals of (N, 2N]"
    );
    let n = vp.n_base as f64;
    let inv = 1.0 / (4.0 * vp.big_q() - 2.0);
    let osc = vp.f_ratio.powf(inv) * n.powf(1.0 - (vp.q as f64 + 2.0) * inv);
    vp.c * (osc + n / vp.f_ratio)
}

// ============================================================================
// Decay fits
// ============================================================================

/// Which decay law a fit measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    /// `ln |phi| ~ slope * ln t` (dense regime, `beta = 1`).
    PowerLaw,
    /// `ln(-ln |phi|) ~ slope * ln t` (sparse regime, `beta < 1`); the
    /// slope is the stretched-exponential exponent.
    StretchedExponential,
}

/// Result of a decay fit: the regression plus the points that entered it.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Law fitted.
    pub kind: DecayKind,
    /// OLS fit; for `PowerLaw` the slope estimates the decay exponent of
    /// `|phi|`, for `StretchedExponential` it estimates the exponent of
    /// `t` inside the exponential.
    pub fit: SlopeFit<f64>,
    /// `(ln t, y)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped because the modulus underflowed or vanished.
    pub dropped_underflow: usize,
    /// Points dropped as transient (first decade of the grid).
    pub dropped_transient: usize,
}

/// Fits the decay exponent of the modulus over a log-spaced grid.
///
/// - `beta = 1`: fits `ln |phi(t)|` against `ln t`; the expected slope is
///   near `-1/s`.
/// - `beta < 1`: fits `ln(-ln |phi(t)|)` against `ln t`, where the modulus
///   is the product restricted to the dyadic window of
///   [`make_blocks`] at `q = 0`. That window — indices between roughly
///   `t^(1/(s+2))` and `t^(1/(s+1))` — is the segment whose decay the
///   stretched-exponential envelope tracks, with exponent
///   `(1-beta)/(s+1)`; the full product decays strictly faster (exponent
///   `(1-beta)/s`) and is available via [`modulus_sq_product`].
///
/// The first decade of the grid is excluded from the regression
/// (transient regime); points whose modulus underflows below `1e-300`
/// (or vanishes exactly) are dropped and counted.
///
/// `tol` is the certified-truncation target for the `beta = 1` branch;
/// the block-window branch is an exact finite product and ignores it.
///
/// # Errors
///
/// - `Error::Domain` for an invalid grid or divergent parameters.
/// - `Error::Unsupported` for `beta > 1`.
/// - `Error::Capacity` when the grid outruns certified truncation.
/// - `Error::Degenerate` if fewer than two usable points remain.
pub fn decay_fit(params: &SeriesParams, t_grid: &[f64], tol: f64) -> Result<DecayFit> {
    require_product_regime(params)?;
    if t_grid.len() < 2 {
        return Err(Error::Domain(format!(
            "decay fit needs at least 2 grid points, got {}",
            t_grid.len()
        )));
    }
    if t_grid
        .windows(2)
        .any(|w| !(w[0] > 0.0) || !(w[1] > w[0]) || !w[1].is_finite())
    {
        return Err(Error::Domain(
            "grid must be positive, finite, strictly ascending".to_string(),
        ));
    }
    let beta = params.beta();
    if beta > 1.0 {
        return Err(Error::Unsupported(format!(
            "decay fit covers beta <= 1, got beta = {beta}"
        )));
    }
    let kind = if beta == 1.0 {
        DecayKind::PowerLaw
    } else {
        DecayKind::StretchedExponential
    };
    let transient_edge = t_grid[0] * 10.0;
    let mut dropped_transient = 0usize;

    // Evaluate in parallel, keeping grid order.
    let fitted: Vec<Option<(f64, f64)>> = t_grid
        .par_iter()
        .map(|&t| -> Result<Option<(f64, f64)>> {
            let y = match kind {
                DecayKind::PowerLaw => {
                    let n = auto_truncation(params, t, tol)?;
                    if n > PRODUCT_LOOP_CAP {
                        return Err(Error::Capacity(format!(
                            "t = {t} needs truncation {n} beyond the product loop cap; \
                             shrink the grid or loosen the tolerance"
                        )));
                    }
                    let lm = log_modulus_sq_over(params, t, 1, n);
                    0.5 * lm // ln |phi|
                }
                DecayKind::StretchedExponential => {
                    let d = make_blocks(params, 0, t)?;
                    if d.is_empty() {
                        return Ok(None);
                    }
                    let lm =
                        log_modulus_sq_over(params, t, (1u64 << d.k_lo) + 1, 1u64 << d.k_hi);
                    let neg_log_mod = -0.5 * lm;
                    if !(neg_log_mod > 0.0) {
                        return Ok(None);
                    }
                    neg_log_mod.ln() // ln(-ln |phi|)
                }
            };
            if !y.is_finite() || y < -690.0 {
                // modulus vanished or underflowed below 1e-300
                return Ok(None);
            }
            Ok(Some((t.ln(), y)))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut dropped_underflow = 0usize;
    for (&t, entry) in t_grid.iter().zip(fitted) {
        match entry {
            Some(p) => {
                if t < transient_edge {
                    dropped_transient += 1;
                } else {
                    points.push(p);
                }
            }
            None => dropped_underflow += 1,
        }
    }
    let fit = fit_slope(&points)?;
    Ok(DecayFit {
        kind,
        fit,
        points,
        dropped_underflow,
        dropped_transient,
    })
}

/// Result of a pointwise envelope check `y <= exponent * ln t + ln C`.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Envelope exponent used.
    pub exponent: f64,
    /// `ln C`, calibrated as the max excess over the calibration prefix.
    pub log_c: f64,
    /// Points in the calibration prefix.
    pub calibrated_on: usize,
    /// Points checked after calibration.
    pub checked: usize,
    /// Violations among checked points.
    pub violations: usize,
    /// Largest excess above the envelope among checked points (negative
    /// when everything is below it).
    pub max_excess: f64,
}

/// Calibrates `ln C` on points with `t <= calib_t_max` and checks
/// `y <= exponent * ln t + ln C` on every later point. `points` are
/// `(t, y)` with `y` on the log scale (e.g. `ln |phi(t)|`).
///
/// # Errors
///
/// `Error::Degenerate` if either side of the split is empty.
pub fn power_envelope_check(
    points: &[(f64, f64)],
    exponent: f64,
    calib_t_max: f64,
) -> Result<EnvelopeReport> {
    let mut log_c = f64::NEG_INFINITY;
    let mut calibrated_on = 0usize;
    for &(t, y) in points.iter().filter(|(t, _)| *t <= calib_t_max) {
        log_c = log_c.max(y - exponent * t.ln());
        calibrated_on += 1;
    }
    if calibrated_on == 0 {
        return Err(Error::Degenerate(
            "no points in the calibration prefix".to_string(),
        ));
    }
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut max_excess = f64::NEG_INFINITY;
    for &(t, y) in points.iter().filter(|(t, _)| *t > calib_t_max) {
        let excess = y - (exponent * t.ln() + log_c);
        max_excess = max_excess.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
        checked += 1;
    }
    if checked == 0 {
        return Err(Error::Degenerate(
            "no points beyond the calibration prefix".to_string(),
        ));
    }
    Ok(EnvelopeReport {
        exponent,
        log_c,
        calibrated_on,
        checked,
        violations,
        max_excess,
    })
}

// ============================================================================
// Sobolev energy
// ============================================================================

/// One integration segment of a Sobolev energy computation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevSegment {
    /// Segment start.
    pub t_lo: f64,
    /// Segment end.
    pub t_hi: f64,
    /// Contribution of `int |phi|^2 t^(2 gamma) dt` over the segment.
    pub contribution: f64,
    /// Quadrature points used after refinement.
    pub points_used: usize,
}

/// Sobolev energy report: the two-sided integral plus its breakdown into
/// segments so that convergence in the upper limit can be assessed.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevReport {
    /// Fractional order.
    pub gamma: f64,
    /// Upper integration limit.
    pub t_max: f64,
    /// `2 * int_0^{t_max} |phi(t)|^2 t^(2 gamma) dt` (evenness folded in).
    pub energy: f64,
    /// Per-segment contributions: `[0, 1]`, then decades up to `t_max`.
    pub segments: Vec<SobolevSegment>,
    /// Largest certified log-scale truncation bound among evaluated points.
    pub max_point_trunc: f64,
}

/// Numerically integrates `2 * int_0^T |phi(t)|^2 t^(2 gamma) dt` by
/// trapezoid quadrature: linear spacing on `[0, min(1, T)]`, log spacing
/// on each decade above 1, each segment refined by doubling until its
/// contribution changes by less than 0.1% (at most 5 doublings).
///
/// Point values use certified truncation at tolerance 0.05 (log scale),
/// capped at the product loop limit; the worst per-point certificate is
/// reported.
///
/// # Errors
///
/// `Error::Domain` unless `gamma >= 0` and `t_max > 0`, plus the product
/// regime conditions.
pub fn sobolev_energy(params: &SeriesParams, gamma: f64, t_max: f64) -> Result<SobolevReport> {
    require_product_regime(params)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::Domain(format!("t_max must be > 0, got {t_max}")));
    }
    let policy = TruncationPolicy {
        tol: 0.05,
        n_cap: PRODUCT_LOOP_CAP,
    };

    let integrand = |t: f64| -> Result<(f64, f64)> {
        if t == 0.0 {
            // t^(2 gamma) at 0: 1 for gamma = 0 (|phi(0)|^2 = 1), else 0
            return Ok((if gamma == 0.0 { 1.0 } else { 0.0 }, 0.0));
        }
        let n = match auto_truncation(params, t, policy.tol) {
            Ok(n) => n.min(policy.n_cap),
            Err(_) => policy.n_cap,
        };
        let lm = log_modulus_sq_over(params, t, 1, n);
        let cert = truncation_certificate(params, t, n);
        Ok(((lm + 2.0 * gamma * t.ln()).exp(), cert))
    };

    let mut segments = Vec::new();
    let mut max_trunc = 0.0_f64;
    let mut energy = CompensatedSum::new();

    // segment boundaries: [0, 1], then decades to t_max
    let mut bounds = vec![(0.0_f64, t_max.min(1.0))];
    let mut lo = 1.0_f64;
    while lo < t_max {
        let hi = (lo * 10.0).min(t_max);
        bounds.push((lo, hi));
        lo = hi;
    }

    for (a, b) in bounds {
        let log_spaced = a >= 1.0;
        let mut m = 8usize;
        let mut prev: Option<f64> = None;
        let mut contribution = 0.0;
        let mut used = 0usize;
        for _ in 0..=5 {
            // grid of m+1 points on [a, b]
            let ts: Vec<f64> = (0..=m)
                .map(|i| {
                    let x = i as f64 / m as f64;
                    if log_spaced {
                        a * (b / a).powf(x)
                    } else {
                        a + (b - a) * x
                    }
                })
                .collect();
            let vals: Vec<(f64, f64)> = ts
                .par_iter()
                .map(|&t| integrand(t))
                .collect::<Result<_>>()?;
            let mut acc = CompensatedSum::new();
            for i in 0..m {
                let (t0, t1) = (ts[i], ts[i + 1]);
                acc.add(0.5 * (vals[i].0 + vals[i + 1].0) * (t1 - t0));
            }
            for &(_, cert) in &vals {
                max_trunc = max_trunc.max(cert);
            }
            contribution = acc.value();
            used = m + 1;
            if let Some(p) = prev {
                if (contribution - p).abs() <= 1e-3 * contribution.abs().max(1e-300) {
                    break;
                }
            }
            prev = Some(contribution);
            m *= 2;
        }
        energy.add(contribution);
        segments.push(SobolevSegment {
            t_lo: a,
            t_hi: b,
            contribution,
            points_used: used,
        });
    }

    Ok(SobolevReport {
        gamma,
        t_max,
        energy: 2.0 * energy.value(),
        segments,
        max_point_trunc: max_trunc,
    })
}

// ============================================================================
// Tests
// ============================================================================

//! Command-line argument definitions.
//!
//! Every subcommand resolves its flags into a fully explicit config that is
//! echoed verbatim inside the JSON envelope of its output, so a saved
//! artifact always records the exact parameters (defaults included) that
//! produced it.
//!
//! Two flags deliberately stay *out* of the echoed config:
//!
//! - `--threads` (and its `DRS_THREADS` environment fallback) only selects
//!   the worker-pool size. Every command is bitwise thread-count invariant,
//!   so the value cannot influence any output byte and echoing it would
//!   spuriously distinguish otherwise identical runs.
//! - `--out` only selects where bytes go, not which bytes are produced.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Top-level command line: `drs <COMMAND> [FLAGS]`.
#[derive(Debug, Parser)]
#[command(
    name = "drs",
    version,
    about = "Numerical laboratory for random Dirichlet series with sparse Bernoulli coefficients"
)]
pub struct Cli {
    /// Worker threads for parallel stages; overrides the DRS_THREADS
    /// environment variable. Defaults to all cores. Outputs are identical
    /// for every setting.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

/// All subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the truncated series at four reference exponents and write
    /// one density histogram per exponent.
    Figure1(Figure1Args),
    /// Draw independent samples of the truncated series.
    Sample(SampleArgs),
    /// Enumerate the exact atomic law of a small truncation.
    Exact(ExactArgs),
    /// Evaluate the characteristic-function modulus on a log grid, with a
    /// truncation certificate per point.
    Charfn(CharfnArgs),
    /// Fit the modulus decay law: power law for beta = 1, stretched
    /// exponential for beta < 1.
    DecayFit(DecayFitArgs),
    /// Sweep dyadic-block exponential sums against the oscillation bound.
    VdcSweep(VdcSweepArgs),
    /// Record-maximum moments and the beta-decomposition consistency check.
    Records(RecordsArgs),
    /// Weighted L2 energy of the modulus up to a frequency cutoff.
    Sobolev(SobolevArgs),
    /// Mertens-product convergence and squarefree-density diagnostics.
    Mertens(MertensArgs),
    /// Prime-tail covering experiment near the lower edge of the support.
    Singularity(SingularityArgs),
    /// Divergence/decay diagnostics for a prime-indexed coefficient family.
    ApCheck(ApCheckArgs),
    /// Run the full acceptance checklist; exits nonzero if any item fails.
    Verify(VerifyArgs),
}

/// Serialization format for single-file outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// JSON envelope `{schema_version, command, config, result}`.
    Json,
    /// Headered CSV: UTF-8, LF line endings, `.` decimal separator.
    Csv,
}

/// Output destination and format, shared by most subcommands.
#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

/// Arguments of `drs figure1`.
#[derive(Debug, Args)]
pub struct Figure1Args {
    /// Truncation level N of the sampled series.
    #[arg(long = "n-trunc", default_value_t = 10_000, value_name = "N")]
    pub n_trunc: u64,

    /// Number of samples per exponent.
    #[arg(long, default_value_t = 1_000_000, value_name = "COUNT")]
    pub samples: u64,

    /// Base RNG seed; exponent i uses stream id i.
    #[arg(long, default_value_t = 1, value_name = "SEED")]
    pub seed: u64,

    /// Histogram bin width.
    #[arg(long, default_value_t = 1e-3, value_name = "WIDTH")]
    pub bins: f64,

    /// Directory for the per-exponent CSV files (created if missing).
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

/// Arguments of `drs sample`.
#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Coefficient sparsity exponent beta (hit probability n^-beta).
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Truncation level N.
    #[arg(long = "n-trunc", default_value_t = 10_000, value_name = "N")]
    pub n_trunc: u64,

    /// Number of samples.
    #[arg(long, default_value_t = 1_000, value_name = "COUNT")]
    pub samples: u64,

    /// RNG seed (stream id 0).
    #[arg(long, default_value_t = 1, value_name = "SEED")]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs exact`.
#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Coefficient sparsity exponent beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Truncation level N (exhaustive over 2^(N-1) coefficient patterns).
    #[arg(long = "n-trunc", default_value_t = 12, value_name = "N")]
    pub n_trunc: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs charfn`.
#[derive(Debug, Args)]
pub struct CharfnArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Coefficient sparsity exponent beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Lower end of the frequency grid.
    #[arg(long = "t-min", default_value_t = 0.1, value_name = "T")]
    pub t_min: f64,

    /// Upper end of the frequency grid.
    #[arg(long = "t-max", default_value_t = 1_000.0, value_name = "T")]
    pub t_max: f64,

    /// Grid points per decade.
    #[arg(long, default_value_t = 8, value_name = "COUNT")]
    pub ppd: u32,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs decay-fit`.
#[derive(Debug, Args)]
pub struct DecayFitArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Coefficient sparsity exponent beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Lower end of the frequency grid.
    #[arg(long = "t-min", default_value_t = 100.0, value_name = "T")]
    pub t_min: f64,

    /// Upper end of the frequency grid.
    #[arg(long = "t-max", default_value_t = 1e6, value_name = "T")]
    pub t_max: f64,

    /// Grid points per decade.
    #[arg(long, default_value_t = 12, value_name = "COUNT")]
    pub ppd: u32,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs vdc-sweep`.
#[derive(Debug, Args)]
pub struct VdcSweepArgs {
    /// Series exponent s of the phase t/n^s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// First frequency decade (rounded to a power of ten).
    #[arg(long = "t-min", default_value_t = 1e3, value_name = "T")]
    pub t_min: f64,

    /// Last frequency decade (rounded to a power of ten).
    #[arg(long = "t-max", default_value_t = 1e9, value_name = "T")]
    pub t_max: f64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs records`.
#[derive(Debug, Args)]
pub struct RecordsArgs {
    /// Record level n (sequence length of the simulated process).
    #[arg(long = "n-trunc", default_value_t = 100, value_name = "N")]
    pub n_trunc: u64,

    /// Monte Carlo trials for the decomposition check.
    #[arg(long, default_value_t = 100_000, value_name = "COUNT")]
    pub samples: u64,

    /// RNG seed (stream id 0).
    #[arg(long, default_value_t = 1, value_name = "SEED")]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs sobolev`.
#[derive(Debug, Args)]
pub struct SobolevArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Coefficient sparsity exponent beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Weight exponent gamma of the factor t^(2 gamma).
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,

    /// Upper integration limit.
    #[arg(long = "t-max", default_value_t = 1e4, value_name = "T")]
    pub t_max: f64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs mertens`.
#[derive(Debug, Args)]
pub struct MertensArgs {
    /// Sieve limit; the decade table runs from 10^3 up to this value.
    #[arg(long, default_value_t = 100_000_000, value_name = "X")]
    pub limit: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs singularity`.
#[derive(Debug, Args)]
pub struct SingularityArgs {
    /// Series exponent s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,

    /// Covering-set exponent (number of generators ~ N^epsilon).
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,

    /// Experiment scale N.
    #[arg(long = "n-trunc", default_value_t = 100_000, value_name = "N")]
    pub n_trunc: u64,

    /// Monte Carlo trials.
    #[arg(long, default_value_t = 1_000_000, value_name = "COUNT")]
    pub samples: u64,

    /// RNG seed (stream id 0).
    #[arg(long, default_value_t = 1, value_name = "SEED")]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Coefficient families accepted by `drs ap-check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApFamily {
    /// a_p = 1/p (the borderline divergent family).
    PInverse,
    /// a_p = 0 (identically zero).
    Zero,
    /// a_p = 1 (no decay).
    One,
    /// a_p = 1/ln p (diverges, but with sub-geometric decade decay).
    LogInverse,
}

/// Arguments of `drs ap-check`.
#[derive(Debug, Args)]
pub struct ApCheckArgs {
    /// Coefficient family to diagnose.
    #[arg(value_enum, default_value_t = ApFamily::PInverse)]
    pub family: ApFamily,

    /// Sieve limit for the prime decades.
    #[arg(long, default_value_t = 1_000_000, value_name = "X")]
    pub limit: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

/// Arguments of `drs verify`.
#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only the checklist item with this 1-based index.
    #[arg(long, value_name = "INDEX")]
    pub only: Option<u32>,
}

//! `drs` — a command-line laboratory for random Dirichlet series
//! `S = sum_n I_n / n^s` with independent `I_n ~ Bernoulli(n^-beta)`.
//!
//! The binary exposes the sampling, exact-law, Fourier, record-process and
//! prime-experiment routines of `drs-core` as twelve subcommands (see
//! [`cli::Command`]), plus `verify`, which runs the acceptance checklist
//! shipped in [`acceptance`].
//!
//! # Exit codes
//!
//! | Code | Meaning                                             |
//! |------|-----------------------------------------------------|
//! | 0    | success                                             |
//! | 1    | runtime failure (I/O, capacity, internal)           |
//! | 2    | invalid arguments or parameters outside the domain  |
//!
//! # Determinism
//!
//! Randomized commands take `--seed` and draw from counter-based streams
//! split per work chunk, so equal flags give byte-identical outputs at any
//! `--threads` setting (or `DRS_THREADS`, which the flag overrides).

use std::process::ExitCode;

use anyhow::Context;

pub mod acceptance;
pub mod cli;
pub mod commands;
pub mod output;

use cli::{Cli, Command};

/// Builds the global worker pool from `--threads` or `DRS_THREADS`.
///
/// With neither present the pool keeps rayon's default size. A zero value
/// also means "default size" (rayon's convention).
fn init_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("DRS_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                drs_core::Error::Domain(format!(
                    "DRS_THREADS must be a non-negative integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the worker pool")?;
    }
    Ok(())
}

/// Runs one parsed command line to completion.
///
/// Returns the process exit code for successful dispatch; argument and
/// domain errors surface as [`drs_core::Error`] values inside the
/// `anyhow` chain so the binary can map them to exit code 2.
pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Figure1(a) => commands::figure1(a)?,
        Command::Sample(a) => commands::sample(a)?,
        Command::Exact(a) => commands::exact(a)?,
        Command::Charfn(a) => commands::charfn(a)?,
        Command::DecayFit(a) => commands::decay_fit(a)?,
        Command::VdcSweep(a) => commands::vdc_sweep(a)?,
        Command::Records(a) => commands::records_cmd(a)?,
        Command::Sobolev(a) => commands::sobolev(a)?,
        Command::Mertens(a) => commands::mertens(a)?,
        Command::Singularity(a) => commands::singularity(a)?,
        Command::ApCheck(a) => commands::ap_check(a)?,
        Command::Verify(a) => return verify(a),
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs the acceptance checklist and prints one verdict line per item.
fn verify(args: &cli::VerifyArgs) -> anyhow::Result<ExitCode> {
    let bin = std::env::current_exe().context("locating the running binary")?;
    let outcomes = match args.only {
        Some(index) => {
            let item = acceptance::run_one(index, &bin).ok_or_else(|| {
                drs_core::Error::Domain(format!(
                    "--only must be between 1 and {}, got {index}",
                    acceptance::ITEM_COUNT
                ))
            })?;
            vec![item]
        }
        None => acceptance::run_all(&bin),
    };
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failed} of {} checks failed", outcomes.len());
        Ok(ExitCode::FAILURE)
    }
}

/// True when any error in the chain is a domain/validation error, which
/// the binary reports with exit code 2.
pub fn is_validation_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause
            .downcast_ref::<drs_core::Error>()
            .is_some_and(drs_core::Error::is_validation)
    })
}

//! `doe`: command-line driver for dynamic operating envelope studies.
//!
//! Exit codes: 0 success, 1 internal error, 2 input error, 3 power-flow
//! non-convergence. `DOE_THREADS` caps the number of worker threads.

mod chart;
mod error;
mod pipeline;
mod policy;
mod rt;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doe_core::csvio::write_load_profiles;
use doe_core::synthetic::{feeder76, feeder76_profiles};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::run::RunDir;

#[derive(Parser, Debug)]
#[command(name = "doe", version, about = "Dynamic operating envelopes for radial feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Real-time envelopes from measured voltages (no network needed)
    RtDoe(rt::RtDoeArgs),
    /// Day-ahead robust envelopes from load scenarios
    DaDoe(pipeline::DaDoeArgs),
    /// Time M1 against M2 on the same scenario voltages
    Benchmark(pipeline::BenchmarkArgs),
    /// P-Q feasible region of one envelope cell
    PqChart(chart::PqChartArgs),
    /// Nominal power flow over the profile horizon
    Powerflow(pipeline::PowerflowArgs),
    /// Envelope shrinkage per cell
    Shrinkage(chart::ShrinkageArgs),
    /// Write the built-in 76-bus test feeder and its load profiles
    SynthFeeder(SynthArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "feeder")]
    out: PathBuf,
}

fn synth_feeder(args: &SynthArgs) -> CliResult<()> {
    let mut dir = RunDir::create(&args.out)?;
    let net = feeder76();
    dir.json("network.json", &net)?;
    let profiles = feeder76_profiles();
    dir.csv("profiles.csv", |w| write_load_profiles(w, &profiles))?;
    #[derive(Serialize)]
    struct Config {
        buses: usize,
        branches: usize,
        load_buses: usize,
    }
    dir.finish(
        "synth-feeder",
        None,
        &Config {
            buses: net.buses.len(),
            branches: net.branches.len(),
            load_buses: profiles.len(),
        },
    )
}

/// Worker cap from `DOE_THREADS`; also sizes the global pool used for
/// scenario generation and parallel envelope evaluation.
fn workers() -> CliResult<Option<usize>> {
    let Ok(raw) = std::env::var("DOE_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("DOE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::internal)?;
    Ok(Some(n))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::RtDoe(a) => rt::run(a),
        Command::DaDoe(a) => pipeline::da_doe(a, workers()?),
        Command::Benchmark(a) => pipeline::benchmark_cmd(a, workers()?),
        Command::PqChart(a) => chart::pq_chart(a),
        Command::Powerflow(a) => pipeline::powerflow_cmd(a, workers()?),
        Command::Shrinkage(a) => chart::shrinkage_cmd(a),
        Command::SynthFeeder(a) => synth_feeder(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("doe: {e}");
            e.exit_code()
        }
    }
}

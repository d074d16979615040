//! Day-ahead commands: scenarios, batch power flow, robust envelopes.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use doe_core::csvio::{
    read_load_profiles, read_path, read_scenarios, write_doe, write_u_bands, write_voltage_scenarios, write_voltages,
};
use doe_core::envelope::Policies;
use doe_core::netmodel::{check_profiles, load_network, Network};
use doe_core::powerflow::{batch_solve, BatchOutput, PowerFlowError};
use doe_core::robust::{benchmark, m1_from_bands, m2_doe, u_bands, CcConfig, TailSplit, VoltageScenarioSet, DEFAULT_ALPHA};
use doe_core::scenario::{generate, NoiseConfig, ScenarioSet, DEFAULT_SIGMA};
use doe_core::Complex64;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::policy::PolicyArgs;
use crate::run::RunDir;

/// Inputs shared by every command that needs voltage scenarios.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Network file (JSON)
    #[arg(long, value_name = "FILE")]
    pub network: PathBuf,
    /// Nominal load profiles, CSV `bus_id,t,p_pu,q_pu`
    #[arg(long, value_name = "CSV", required_unless_present = "scenario_file")]
    pub profiles: Option<PathBuf>,
    /// Pre-generated load scenarios, CSV `scenario,bus_id,t,p_pu,q_pu`
    #[arg(long, value_name = "CSV", conflicts_with = "profiles")]
    pub scenario_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub scenarios: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Put the whole alpha in each tail instead of alpha/2
    #[arg(long)]
    pub one_sided: bool,
}

/// Validated configuration of a day-ahead run, recorded in the manifest.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub network: PathBuf,
    pub profiles: Option<PathBuf>,
    pub scenario_file: Option<PathBuf>,
    pub scenarios: usize,
    pub sigma: f64,
    pub seed: u64,
    pub alpha: f64,
    pub tail_split: TailSplit,
    pub policies: Policies,
}

impl RunConfig {
    pub fn new(args: &ScenarioArgs, policies: Policies) -> CliResult<Self> {
        for path in [Some(&args.network), args.profiles.as_ref(), args.scenario_file.as_ref()]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                return Err(CliError::Input(format!("{} does not exist", path.display())));
            }
        }
        let config = RunConfig {
            network: args.network.clone(),
            profiles: args.profiles.clone(),
            scenario_file: args.scenario_file.clone(),
            scenarios: args.scenarios,
            sigma: args.sigma,
            seed: args.seed,
            alpha: args.alpha,
            tail_split: if args.one_sided { TailSplit::OneSided } else { TailSplit::TwoSided },
            policies,
        };
        config.cc()?;
        Ok(config)
    }

    pub fn cc(&self) -> CliResult<CcConfig> {
        let mut cc = CcConfig::new(self.alpha).map_err(CliError::input)?;
        cc.split = self.tail_split;
        Ok(cc)
    }

    fn network(&self) -> CliResult<Network> {
        load_network(&self.network).map_err(|e| CliError::Input(format!("{}: {e}", self.network.display())))
    }

    fn load_scenarios(&self, network: &Network) -> CliResult<ScenarioSet> {
        if let Some(path) = &self.scenario_file {
            return read_path(path, read_scenarios).map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
        }
        let path = self.profiles.as_ref().expect("clap requires profiles or scenario file");
        let profiles =
            read_path(path, read_load_profiles).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        check_profiles(network, &profiles).map_err(CliError::input)?;
        let cfg = NoiseConfig {
            sigma: self.sigma,
            ..Default::default()
        };
        generate(&profiles, cfg, self.scenarios, self.seed).map_err(CliError::input)
    }

    /// Scenario voltages, failing with exit code 3 if any cell diverges.
    pub fn voltages(&self, workers: Option<usize>) -> CliResult<VoltageScenarioSet> {
        let network = self.network()?;
        let set = self.load_scenarios(&network)?;
        converged(batch_solve(&network, &set, workers))
    }
}

fn converged(result: Result<BatchOutput, PowerFlowError>) -> CliResult<VoltageScenarioSet> {
    let out = result.map_err(|e| match e {
        PowerFlowError::Pool(_) => CliError::internal(e),
        _ => CliError::input(e),
    })?;
    if out.failures.is_empty() {
        return Ok(out.voltages);
    }
    let cells: Vec<String> = out
        .failures
        .iter()
        .map(|f| format!("(scenario {}, t {})", f.scenario, f.t))
        .collect();
    Err(CliError::NonConvergence(format!("{} cells: {}", cells.len(), cells.join(", "))))
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    M1,
    M2,
}

#[derive(Args, Debug)]
pub struct DaDoeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "m1")]
    pub method: Method,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Also write every scenario voltage to voltage_scenarios.csv
    #[arg(long)]
    pub export_voltages: bool,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct DaConfig<'a> {
    #[serde(flatten)]
    run: &'a RunConfig,
    method: Method,
}

pub fn da_doe(args: &DaDoeArgs, workers: Option<usize>) -> CliResult<()> {
    let config = RunConfig::new(&args.scenario, args.policy.resolve()?)?;
    let cc = config.cc()?;
    let v = config.voltages(workers)?;
    let mut dir = RunDir::create(&args.out)?;
    let doe = match args.method {
        Method::M1 => {
            let bands = u_bands(&v, &cc).map_err(CliError::internal)?;
            dir.csv("u_bands.csv", |w| write_u_bands(w, &bands))?;
            m1_from_bands(&config.policies, &bands)
        }
        Method::M2 => m2_doe(&config.policies, &v, &cc),
    }
    .map_err(CliError::internal)?;
    dir.csv("doe.csv", |w| write_doe(w, &doe))?;
    if args.export_voltages {
        dir.csv("voltage_scenarios.csv", |w| write_voltage_scenarios(w, &v))?;
    }
    dir.finish(
        "da-doe",
        Some(config.seed),
        &DaConfig {
            run: &config,
            method: args.method,
        },
    )
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Evaluate cells on all worker threads instead of one
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

pub fn benchmark_cmd(args: &BenchmarkArgs, workers: Option<usize>) -> CliResult<()> {
    let config = RunConfig::new(&args.scenario, args.policy.resolve()?)?;
    if args.repetitions == 0 {
        return Err(CliError::Input("repetitions must be at least 1".into()));
    }
    let v = config.voltages(workers)?;
    let report = benchmark(&config.policies, &v, &config.cc()?, args.repetitions, args.parallel)
        .map_err(CliError::internal)?;
    println!(
        "m1 {:.3} ms, m2 {:.3} ms over {} repetitions, ratio {:.2}",
        report.m1_ms, report.m2_ms, report.repetitions, report.ratio
    );
    if !report.m1_always_faster() {
        eprintln!("warning: m1 was not faster than m2 in every repetition");
    }
    if report.ratio < 2.0 {
        eprintln!("warning: m2/m1 time ratio {:.2} is below 2", report.ratio);
    }
    let mut dir = RunDir::create(&args.out)?;
    dir.json("benchmark.json", &report)?;
    #[derive(Serialize)]
    struct BenchConfig<'a> {
        #[serde(flatten)]
        run: &'a RunConfig,
        repetitions: usize,
        parallel: bool,
    }
    dir.finish(
        "benchmark",
        Some(config.seed),
        &BenchConfig {
            run: &config,
            repetitions: args.repetitions,
            parallel: args.parallel,
        },
    )
}

#[derive(Args, Debug)]
pub struct PowerflowArgs {
    #[arg(long, value_name = "FILE")]
    pub network: PathBuf,
    /// Load profiles, CSV `bus_id,t,p_pu,q_pu`; missing buses carry no load
    #[arg(long, value_name = "CSV")]
    pub profiles: PathBuf,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PowerflowConfig<'a> {
    network: &'a PathBuf,
    profiles: &'a PathBuf,
}

/// Nominal (noise-free) power flow for every time step.
pub fn powerflow_cmd(args: &PowerflowArgs, workers: Option<usize>) -> CliResult<()> {
    let network = load_network(&args.network).map_err(|e| CliError::Input(format!("{}: {e}", args.network.display())))?;
    let profiles = read_path(&args.profiles, read_load_profiles)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.profiles.display())))?;
    let horizon = check_profiles(&network, &profiles).map_err(CliError::input)?;
    let data = profiles
        .iter()
        .flat_map(|p| (0..horizon).map(move |t| Complex64::new(p.p[t], p.q[t])))
        .collect();
    let set = ScenarioSet::from_parts(1, 0, profiles.iter().map(|p| p.bus_id).collect(), horizon, data)
        .map_err(CliError::internal)?;
    let v = converged(batch_solve(&network, &set, workers))?;
    let mut dir = RunDir::create(&args.out)?;
    dir.csv("voltages.csv", |w| write_voltages(w, &v.scenario_series(0)))?;
    dir.finish(
        "powerflow",
        None,
        &PowerflowConfig {
            network: &args.network,
            profiles: &args.profiles,
        },
    )
}

//! `rt-doe`: envelopes from local voltage measurements only.
//!
//! Uses nothing but the envelope policies and CSV I/O. No network, topology
//! or power-flow code is reachable from here.

use std::path::PathBuf;

use clap::Args;
use doe_core::csvio::{read_path, read_voltages, write_doe};
use doe_core::envelope::rt_doe;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::policy::PolicyArgs;
use crate::run::RunDir;

#[derive(Args, Debug)]
pub struct RtDoeArgs {
    /// Measured voltages, CSV `bus_id,t,v_mag_pu`
    #[arg(long, value_name = "CSV")]
    pub voltages: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Config<'a> {
    voltages: &'a PathBuf,
    policies: &'a doe_core::envelope::Policies,
}

pub fn run(args: &RtDoeArgs) -> CliResult<()> {
    let policies = args.policy.resolve()?;
    let v = read_path(&args.voltages, read_voltages)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.voltages.display())))?;
    let doe = rt_doe(&policies, &v).map_err(CliError::input)?;
    let mut dir = RunDir::create(&args.out)?;
    dir.csv("doe.csv", |w| write_doe(w, &doe))?;
    dir.finish(
        "rt-doe",
        None,
        &Config {
            voltages: &args.voltages,
            policies: &policies,
        },
    )
}

//! Post-processing of an envelope series: P-Q charts and shrinkage.

use std::path::PathBuf;

use clap::Args;
use doe_core::csvio::{read_doe, read_path, write_region_plot, write_shrinkage};
use doe_core::envelope::{DoeSeries, Envelope};
use doe_core::fnaproxy::shrinkage;
use doe_core::netmodel::BusId;
use doe_core::pqchart::{build_region, Piece, PqConstraints, DEFAULT_DISC_VERTICES};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::policy::PolicyArgs;
use crate::run::RunDir;

fn load_doe(path: &PathBuf) -> CliResult<DoeSeries> {
    read_path(path, read_doe).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Args, Debug)]
pub struct PqChartArgs {
    /// Envelope series, CSV `bus_id,t,p_lo,p_hi,q_lo,q_hi,empty`
    #[arg(long, value_name = "CSV")]
    pub doe: PathBuf,
    #[arg(long)]
    pub bus: u32,
    #[arg(long)]
    pub t: usize,
    /// Minimum power factor in (0, 1]
    #[arg(long)]
    pub pf: Option<f64>,
    /// Converter apparent-power limit, pu
    #[arg(long)]
    pub smax: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DISC_VERTICES)]
    pub disc_vertices: usize,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RegionExport<'a> {
    bus_id: BusId,
    t: usize,
    p: Option<(f64, f64)>,
    q: Option<(f64, f64)>,
    constraints: PqConstraints,
    empty: bool,
    area: f64,
    pieces: &'a [Piece],
}

pub fn pq_chart(args: &PqChartArgs) -> CliResult<()> {
    let constraints = PqConstraints {
        pf_limit: args.pf,
        s_max: args.smax,
        disc_vertices: args.disc_vertices,
    };
    constraints.validate().map_err(CliError::input)?;
    let doe = load_doe(&args.doe)?;
    let bus = BusId(args.bus);
    let cell = doe
        .cell(bus, args.t)
        .ok_or_else(|| CliError::Input(format!("no envelope for bus {bus} at t={} in {}", args.t, args.doe.display())))?;
    let region = build_region(&cell.p, &cell.q, &constraints).map_err(CliError::input)?;
    println!("bus {bus} t {}: empty={} area={}", args.t, u8::from(region.empty), region.area());

    let mut dir = RunDir::create(&args.out)?;
    dir.json(
        "region.json",
        &RegionExport {
            bus_id: bus,
            t: args.t,
            p: cell.p.bounds(),
            q: cell.q.bounds(),
            constraints,
            empty: region.empty,
            area: region.area(),
            pieces: &region.pieces,
        },
    )?;
    dir.csv("region_plot.csv", |w| write_region_plot(w, &region))?;

    #[derive(Serialize)]
    struct Config<'a> {
        doe: &'a PathBuf,
        bus_id: BusId,
        t: usize,
        constraints: PqConstraints,
    }
    dir.finish(
        "pq-chart",
        None,
        &Config {
            doe: &args.doe,
            bus_id: bus,
            t: args.t,
            constraints,
        },
    )
}

#[derive(Args, Debug)]
pub struct ShrinkageArgs {
    #[arg(long, value_name = "CSV")]
    pub doe: PathBuf,
    /// Policies whose limits define the unshrunk range
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

pub fn shrinkage_cmd(args: &ShrinkageArgs) -> CliResult<()> {
    let policies = args.policy.resolve()?;
    let doe = load_doe(&args.doe)?;
    let s = shrinkage(&doe, &policies).map_err(CliError::input)?;
    let mut dir = RunDir::create(&args.out)?;
    dir.csv("shrinkage.csv", |w| write_shrinkage(w, &s))?;
    let total: f64 = s.values.iter().map(|x| x.s_p + x.s_q).sum();
    let empty = doe.cells().iter().filter(|c| c.p == Envelope::Empty || c.q == Envelope::Empty).count();
    println!("{} cells, mean shrinkage {:.4}, {empty} empty", s.values.len(), total / (2 * s.values.len()) as f64);

    #[derive(Serialize)]
    struct Config<'a> {
        doe: &'a PathBuf,
        policies: &'a doe_core::envelope::Policies,
    }
    dir.finish(
        "shrinkage",
        None,
        &Config {
            doe: &args.doe,
            policies: &policies,
        },
    )
}

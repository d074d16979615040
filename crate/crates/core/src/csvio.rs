//! On-disk CSV formats.
//!
//! | file | header |
//! |------|--------|
//! | load profiles | `bus_id,t,p_pu,q_pu` |
//! | measured voltages | `bus_id,t,v_mag_pu` |
//! | load scenarios | `scenario,bus_id,t,p_pu,q_pu` |
//! | voltage scenarios | `scenario,bus_id,t,v_mag_pu` |
//! | envelopes | `bus_id,t,p_lo,p_hi,q_lo,q_hi,empty` |
//! | voltage bands | `bus_id,t,u_low_pu,u_high_pu` |
//! | shrinkage | `bus_id,t,s_p,s_q` |
//! | P-Q plot data | `piece,vertex_idx,p,q` |
//!
//! Readers require dense data: every bus must have every step `0..T` exactly
//! once, and buses come back in ascending id order. Writers emit rows in
//! bus-major (then time) order, floats in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{CellEnvelope, DoeSeries, Envelope, VoltageSeries};
use crate::fnaproxy::ShrinkageSeries;
use crate::netmodel::{BusId, LoadProfile};
use crate::pqchart::PqRegion;
use crate::robust::{UBands, VoltageScenarioSet};
use crate::scenario::ScenarioSet;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("missing row for bus {bus}, t={t}")]
    Missing { bus: BusId, t: usize },
    #[error("missing row for scenario {scenario}, bus {bus}, t={t}")]
    MissingScenario { scenario: usize, bus: BusId, t: usize },
    #[error("file has no data rows")]
    NoRows,
    #[error("write failed: {0}")]
    Write(String),
}

impl From<csv::Error> for CsvError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, csv::Position::line);
        match e.kind() {
            csv::ErrorKind::Io(_) => CsvError::Write(e.to_string()),
            _ => CsvError::Row {
                line,
                message: e.to_string(),
            },
        }
    }
}

fn open(path: &Path) -> Result<File, CsvError> {
    File::open(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<File, CsvError> {
    File::create(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_rows<T: DeserializeOwned>(reader: impl Read) -> Result<Vec<(u64, T)>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result?;
        let line = record.position().map_or(0, csv::Position::line);
        let row = record.deserialize(Some(&headers)).map_err(|e| CsvError::Row {
            line,
            message: e.to_string(),
        })?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(CsvError::NoRows);
    }
    Ok(rows)
}

fn write_rows<T: Serialize>(writer: impl Write, rows: impl IntoIterator<Item = T>) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| CsvError::Write(e.to_string()))
}

/// Collects `(bus, t) → value` rows into a dense bus-major grid.
fn dense<T: Copy>(rows: Vec<(u64, BusId, usize, T)>) -> Result<(Vec<BusId>, usize, Vec<T>), CsvError> {
    let mut grid: BTreeMap<BusId, BTreeMap<usize, T>> = BTreeMap::new();
    for (line, bus, t, value) in rows {
        if grid.entry(bus).or_default().insert(t, value).is_some() {
            return Err(CsvError::Row {
                line,
                message: format!("duplicate row for bus {bus}, t={t}"),
            });
        }
    }
    let horizon = grid
        .values()
        .filter_map(|m| m.keys().next_back())
        .max()
        .map_or(0, |t| t + 1);
    let mut values = Vec::with_capacity(grid.len() * horizon);
    for (&bus, steps) in &grid {
        for t in 0..horizon {
            values.push(*steps.get(&t).ok_or(CsvError::Missing { bus, t })?);
        }
    }
    Ok((grid.into_keys().collect(), horizon, values))
}

fn non_finite(line: u64, what: &str, value: f64) -> Result<(), CsvError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CsvError::Row {
            line,
            message: format!("{what} = {value} is not finite"),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LoadRow {
    bus_id: BusId,
    t: usize,
    p_pu: f64,
    q_pu: f64,
}

pub fn read_load_profiles(reader: impl Read) -> Result<Vec<LoadProfile>, CsvError> {
    let rows = read_rows::<LoadRow>(reader)?
        .into_iter()
        .map(|(line, r)| {
            non_finite(line, "p_pu", r.p_pu)?;
            non_finite(line, "q_pu", r.q_pu)?;
            Ok((line, r.bus_id, r.t, (r.p_pu, r.q_pu)))
        })
        .collect::<Result<Vec<_>, CsvError>>()?;
    let (buses, horizon, values) = dense(rows)?;
    Ok(buses
        .into_iter()
        .enumerate()
        .map(|(i, bus_id)| {
            let cells = &values[i * horizon..(i + 1) * horizon];
            LoadProfile {
                bus_id,
                p: cells.iter().map(|c| c.0).collect(),
                q: cells.iter().map(|c| c.1).collect(),
            }
        })
        .collect())
}

pub fn write_load_profiles(writer: impl Write, profiles: &[LoadProfile]) -> Result<(), CsvError> {
    write_rows(
        writer,
        profiles.iter().flat_map(|p| {
            (0..p.horizon()).map(move |t| LoadRow {
                bus_id: p.bus_id,
                t,
                p_pu: p.p[t],
                q_pu: p.q[t],
            })
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct VoltageRow {
    bus_id: BusId,
    t: usize,
    v_mag_pu: f64,
}

/// Reads measured voltages. Values must be positive.
pub fn read_voltages(reader: impl Read) -> Result<VoltageSeries, CsvError> {
    let rows = read_rows::<VoltageRow>(reader)?
        .into_iter()
        .map(|(line, r)| {
            if !(r.v_mag_pu > 0.0 && r.v_mag_pu.is_finite()) {
                return Err(CsvError::Row {
                    line,
                    message: format!("v_mag_pu = {} is not a positive number", r.v_mag_pu),
                });
            }
            Ok((line, r.bus_id, r.t, r.v_mag_pu))
        })
        .collect::<Result<Vec<_>, CsvError>>()?;
    let (bus_ids, horizon, values) = dense(rows)?;
    Ok(VoltageSeries {
        bus_ids,
        horizon,
        values,
    })
}

pub fn write_voltages(writer: impl Write, v: &VoltageSeries) -> Result<(), CsvError> {
    write_rows(
        writer,
        v.bus_ids.iter().enumerate().flat_map(|(i, &bus_id)| {
            v.series(i).iter().enumerate().map(move |(t, &v_mag_pu)| VoltageRow { bus_id, t, v_mag_pu })
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct ScenarioRow {
    scenario: usize,
    bus_id: BusId,
    t: usize,
    p_pu: f64,
    q_pu: f64,
}

pub fn write_scenarios(writer: impl Write, set: &ScenarioSet) -> Result<(), CsvError> {
    let buses = set.bus_ids().len();
    write_rows(
        writer,
        (0..set.n()).flat_map(|s| {
            (0..buses).flat_map(move |i| {
                (0..set.horizon()).map(move |t| {
                    let load = set.get(s, i, t);
                    ScenarioRow {
                        scenario: s,
                        bus_id: set.bus_ids()[i],
                        t,
                        p_pu: load.re,
                        q_pu: load.im,
                    }
                })
            })
        }),
    )
}

/// Groups `(scenario, bus, t)` rows into a dense scenario-major tensor.
fn dense_scenarios<T: Copy>(
    rows: Vec<(u64, usize, BusId, usize, T)>,
) -> Result<(usize, Vec<BusId>, usize, Vec<T>), CsvError> {
    let mut by_scenario: BTreeMap<usize, Vec<(u64, BusId, usize, T)>> = BTreeMap::new();
    for (line, s, bus, t, value) in rows {
        by_scenario.entry(s).or_default().push((line, bus, t, value));
    }
    let n = by_scenario.keys().next_back().map_or(0, |s| s + 1);
    let mut shape: Option<(Vec<BusId>, usize)> = None;
    let mut data = Vec::new();
    for s in 0..n {
        let Some(rows) = by_scenario.remove(&s) else {
            let (bus, t) = shape
                .as_ref()
                .map_or((BusId(0), 0), |(b, _)| (b[0], 0));
            return Err(CsvError::MissingScenario { scenario: s, bus, t });
        };
        let (buses, horizon, values) = dense(rows)?;
        match &shape {
            None => shape = Some((buses, horizon)),
            Some((b, h)) => {
                if *b != buses || *h != horizon {
                    return Err(CsvError::Row {
                        line: 0,
                        message: format!("scenario {s} covers a different bus/time set than scenario 0"),
                    });
                }
            }
        }
        data.extend(values);
    }
    let (buses, horizon) = shape.ok_or(CsvError::NoRows)?;
    Ok((n, buses, horizon, data))
}

pub fn read_scenarios(reader: impl Read) -> Result<ScenarioSet, CsvError> {
    let rows = read_rows::<ScenarioRow>(reader)?
        .into_iter()
        .map(|(line, r)| {
            non_finite(line, "p_pu", r.p_pu)?;
            non_finite(line, "q_pu", r.q_pu)?;
            Ok((line, r.scenario, r.bus_id, r.t, Complex64::new(r.p_pu, r.q_pu)))
        })
        .collect::<Result<Vec<_>, CsvError>>()?;
    let (n, buses, horizon, data) = dense_scenarios(rows)?;
    ScenarioSet::from_parts(n, 0, buses, horizon, data).map_err(|e| CsvError::Row {
        line: 0,
        message: e.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
struct VoltageScenarioRow {
    scenario: usize,
    bus_id: BusId,
    t: usize,
    v_mag_pu: f64,
}

pub fn write_voltage_scenarios(writer: impl Write, v: &VoltageScenarioSet) -> Result<(), CsvError> {
    let buses = v.bus_ids().len();
    write_rows(
        writer,
        (0..v.n()).flat_map(|s| {
            (0..buses).flat_map(move |i| {
                (0..v.horizon()).map(move |t| VoltageScenarioRow {
                    scenario: s,
                    bus_id: v.bus_ids()[i],
                    t,
                    v_mag_pu: v.get(s, i, t),
                })
            })
        }),
    )
}

pub fn read_voltage_scenarios(reader: impl Read) -> Result<VoltageScenarioSet, CsvError> {
    let rows = read_rows::<VoltageScenarioRow>(reader)?
        .into_iter()
        .map(|(line, r)| (line, r.scenario, r.bus_id, r.t, r.v_mag_pu))
        .collect();
    let (n, buses, horizon, data) = dense_scenarios(rows)?;
    VoltageScenarioSet::new(n, buses, horizon, &data).map_err(|e| CsvError::Row {
        line: 0,
        message: e.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
struct DoeRow {
    bus_id: BusId,
    t: usize,
    p_lo: f64,
    p_hi: f64,
    q_lo: f64,
    q_hi: f64,
    empty: u8,
}

/// Writes envelopes. A row is flagged `empty=1`, with all four bounds zero,
/// when either its P or its Q envelope is empty.
pub fn write_doe(writer: impl Write, doe: &DoeSeries) -> Result<(), CsvError> {
    write_rows(
        writer,
        doe.iter().map(|(bus_id, t, cell)| match (cell.p.bounds(), cell.q.bounds()) {
            (Some((p_lo, p_hi)), Some((q_lo, q_hi))) => DoeRow {
                bus_id,
                t,
                p_lo,
                p_hi,
                q_lo,
                q_hi,
                empty: 0,
            },
            _ => DoeRow {
                bus_id,
                t,
                p_lo: 0.0,
                p_hi: 0.0,
                q_lo: 0.0,
                q_hi: 0.0,
                empty: 1,
            },
        }),
    )
}

pub fn read_doe(reader: impl Read) -> Result<DoeSeries, CsvError> {
    let rows = read_rows::<DoeRow>(reader)?
        .into_iter()
        .map(|(line, r)| {
            let cell = match r.empty {
                1 => CellEnvelope {
                    p: Envelope::Empty,
                    q: Envelope::Empty,
                },
                0 => {
                    for (name, v) in [("p_lo", r.p_lo), ("p_hi", r.p_hi), ("q_lo", r.q_lo), ("q_hi", r.q_hi)] {
                        non_finite(line, name, v)?;
                    }
                    if r.p_lo > r.p_hi || r.q_lo > r.q_hi {
                        return Err(CsvError::Row {
                            line,
                            message: "lower bound exceeds upper bound on a non-empty row".into(),
                        });
                    }
                    CellEnvelope {
                        p: Envelope::new(r.p_lo, r.p_hi),
                        q: Envelope::new(r.q_lo, r.q_hi),
                    }
                }
                other => {
                    return Err(CsvError::Row {
                        line,
                        message: format!("empty flag must be 0 or 1, got {other}"),
                    })
                }
            };
            Ok((line, r.bus_id, r.t, cell))
        })
        .collect::<Result<Vec<_>, CsvError>>()?;
    let (bus_ids, horizon, cells) = dense(rows)?;
    Ok(DoeSeries::new(bus_ids, horizon, cells).expect("dense grid"))
}

#[derive(Serialize, Deserialize)]
struct BandRow {
    bus_id: BusId,
    t: usize,
    u_low_pu: f64,
    u_high_pu: f64,
}

pub fn write_u_bands(writer: impl Write, bands: &UBands) -> Result<(), CsvError> {
    write_rows(
        writer,
        bands.bus_ids.iter().enumerate().flat_map(|(i, &bus_id)| {
            (0..bands.horizon).map(move |t| {
                let k = i * bands.horizon + t;
                BandRow {
                    bus_id,
                    t,
                    u_low_pu: bands.low[k],
                    u_high_pu: bands.high[k],
                }
            })
        }),
    )
}

pub fn read_u_bands(reader: impl Read) -> Result<UBands, CsvError> {
    let rows = read_rows::<BandRow>(reader)?
        .into_iter()
        .map(|(line, r)| (line, r.bus_id, r.t, (r.u_low_pu, r.u_high_pu)))
        .collect();
    let (bus_ids, horizon, values) = dense(rows)?;
    Ok(UBands {
        bus_ids,
        horizon,
        low: values.iter().map(|v| v.0).collect(),
        high: values.iter().map(|v| v.1).collect(),
    })
}

#[derive(Serialize)]
struct ShrinkageRow {
    bus_id: BusId,
    t: usize,
    s_p: f64,
    s_q: f64,
}

pub fn write_shrinkage(writer: impl Write, s: &ShrinkageSeries) -> Result<(), CsvError> {
    write_rows(
        writer,
        s.bus_ids.iter().enumerate().flat_map(|(i, &bus_id)| {
            (0..s.horizon).map(move |t| {
                let v = s.get(i, t);
                ShrinkageRow {
                    bus_id,
                    t,
                    s_p: v.s_p,
                    s_q: v.s_q,
                }
            })
        }),
    )
}

#[derive(Serialize)]
struct PlotRow {
    piece: usize,
    vertex_idx: usize,
    p: f64,
    q: f64,
}

pub fn write_region_plot(writer: impl Write, region: &PqRegion) -> Result<(), CsvError> {
    write_rows(
        writer,
        region.pieces.iter().enumerate().flat_map(|(piece, pc)| {
            pc.vertices.iter().enumerate().map(move |(vertex_idx, &[p, q])| PlotRow {
                piece,
                vertex_idx,
                p,
                q,
            })
        }),
    )
}

/// Opens `path` and hands it to `read`.
pub fn read_path<T>(path: impl AsRef<Path>, read: impl FnOnce(File) -> Result<T, CsvError>) -> Result<T, CsvError> {
    read(open(path.as_ref())?)
}

/// Creates `path` and hands it to `write`.
pub fn write_path(path: impl AsRef<Path>, write: impl FnOnce(io::BufWriter<File>) -> Result<(), CsvError>) -> Result<(), CsvError> {
    write(io::BufWriter::new(create(path.as_ref())?))
}

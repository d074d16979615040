//! Time-ahead robust envelopes from voltage forecast scenarios.
//!
//! Two methods turn a set of voltage scenarios into one envelope per
//! (bus, time) cell under a chance-constraint level `alpha`:
//!
//! * **M1** takes empirical quantiles of the voltage samples first, giving a
//!   low/high voltage band `[U_L, U_H]` per cell, and intersects the envelopes
//!   evaluated at both ends. Only the two band series need to reach a node.
//! * **M2** evaluates the envelope for every scenario and then takes the
//!   conservative quantile of the per-scenario bounds: the low tail of the
//!   upper bounds and the high tail of the lower bounds. Every scenario series
//!   has to reach the node.
//!
//! With the default two-sided split each tail gets `alpha / 2`.
//!
//! The low tail is ranked as the mirror image of the high tail: the low-tail
//! sample at level `p` is the `(n + 1 − k)`-th smallest, where `k` is the rank
//! [`ecdf_quantile`] uses for `1 − p`. For bounds that are nonincreasing in
//! voltage, which both standard policies are, M1 and M2 then pick the same
//! order statistic and agree exactly.

use std::hint::black_box;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{CellEnvelope, DoeSeries, Envelope, Policies, PolicyError, VoltageSeries};
use crate::netmodel::BusId;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TailSplit {
    /// `alpha / 2` in each tail.
    #[default]
    TwoSided,
    /// `alpha` in each tail.
    OneSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcConfig {
    pub alpha: f64,
    #[serde(default)]
    pub split: TailSplit,
}

impl Default for CcConfig {
    fn default() -> Self {
        CcConfig {
            alpha: DEFAULT_ALPHA,
            split: TailSplit::TwoSided,
        }
    }
}

impl CcConfig {
    pub fn new(alpha: f64) -> Result<Self, RobustError> {
        let cc = CcConfig {
            alpha,
            split: TailSplit::TwoSided,
        };
        cc.validate()?;
        Ok(cc)
    }

    pub fn validate(&self) -> Result<(), RobustError> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(RobustError::InvalidAlpha(self.alpha))
        }
    }

    /// Probability mass excluded from each tail.
    pub fn tail(&self) -> f64 {
        match self.split {
            TailSplit::TwoSided => self.alpha / 2.0,
            TailSplit::OneSided => self.alpha,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RobustError {
    #[error("chance-constraint level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("quantile of an empty sample")]
    EmptySample,
    #[error("quantile level must lie in [0, 1], got {0}")]
    InvalidLevel(f64),
    #[error("envelope series cover different (bus, time) index sets")]
    IndexMismatch,
    #[error("voltage scenario data is not dense: expected {expected} values, found {found}")]
    NotDense { expected: usize, found: usize },
    #[error("voltage {value} at scenario {scenario}, bus {bus}, t={t} is not positive")]
    NonPositiveVoltage {
        scenario: usize,
        bus: BusId,
        t: usize,
        value: f64,
    },
    #[error("scenario set has no scenarios")]
    NoScenarios,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Voltage magnitudes indexed by (scenario, bus, time).
#[derive(Clone, Debug, PartialEq)]
pub struct VoltageScenarioSet {
    n: usize,
    bus_ids: Vec<BusId>,
    horizon: usize,
    /// Cell-major: `(i * horizon + t) * n + s`, so each cell's samples are
    /// contiguous.
    data: Vec<f64>,
}

impl VoltageScenarioSet {
    /// Builds a set from values in `(s, i, t)` order, checking density and
    /// positivity.
    pub fn new(n: usize, bus_ids: Vec<BusId>, horizon: usize, values: &[f64]) -> Result<Self, RobustError> {
        if n == 0 {
            return Err(RobustError::NoScenarios);
        }
        let buses = bus_ids.len();
        let expected = n * buses * horizon;
        if values.len() != expected {
            return Err(RobustError::NotDense {
                expected,
                found: values.len(),
            });
        }
        let mut data = vec![0.0; expected];
        for s in 0..n {
            for i in 0..buses {
                for t in 0..horizon {
                    let value = values[(s * buses + i) * horizon + t];
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(RobustError::NonPositiveVoltage {
                            scenario: s,
                            bus: bus_ids[i],
                            t,
                            value,
                        });
                    }
                    data[(i * horizon + t) * n + s] = value;
                }
            }
        }
        Ok(VoltageScenarioSet {
            n,
            bus_ids,
            horizon,
            data,
        })
    }

    /// Wraps cell-major data produced by the power-flow batch.
    pub(crate) fn from_cell_major(n: usize, bus_ids: Vec<BusId>, horizon: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * bus_ids.len() * horizon);
        VoltageScenarioSet {
            n,
            bus_ids,
            horizon,
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.bus_ids
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, s: usize, i: usize, t: usize) -> f64 {
        self.data[(i * self.horizon + t) * self.n + s]
    }

    /// All scenario samples for the `i`-th bus at step `t`.
    pub fn samples(&self, i: usize, t: usize) -> &[f64] {
        let start = (i * self.horizon + t) * self.n;
        &self.data[start..start + self.n]
    }

    /// One scenario as a measured-voltage series.
    pub fn scenario_series(&self, s: usize) -> VoltageSeries {
        let mut values = Vec::with_capacity(self.bus_ids.len() * self.horizon);
        for i in 0..self.bus_ids.len() {
            for t in 0..self.horizon {
                values.push(self.get(s, i, t));
            }
        }
        VoltageSeries {
            bus_ids: self.bus_ids.clone(),
            horizon: self.horizon,
            values,
        }
    }

    /// Same data with the scenario axis permuted: new scenario `s` is old
    /// scenario `order[s]`.
    pub fn permute_scenarios(&self, order: &[usize]) -> VoltageScenarioSet {
        assert_eq!(order.len(), self.n);
        let mut data = vec![0.0; self.data.len()];
        for cell in 0..self.bus_ids.len() * self.horizon {
            for (s, &from) in order.iter().enumerate() {
                data[cell * self.n + s] = self.data[cell * self.n + from];
            }
        }
        VoltageScenarioSet {
            data,
            ..self.clone()
        }
    }
}

fn rank(q: f64, n: usize) -> usize {
    ((q * n as f64).ceil() as usize).clamp(1, n)
}

fn check(samples: &[f64], q: f64) -> Result<(), RobustError> {
    if samples.is_empty() {
        return Err(RobustError::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(RobustError::InvalidLevel(q));
    }
    Ok(())
}

fn order_statistic(scratch: &mut [f64], k: usize) -> f64 {
    *scratch.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// Order-statistic quantile: the `k`-th smallest sample with
/// `k = max(1, ceil(q * n))`.
pub fn ecdf_quantile(samples: &[f64], q: f64) -> Result<f64, RobustError> {
    check(samples, q)?;
    let mut scratch = samples.to_vec();
    Ok(order_statistic(&mut scratch, rank(q, samples.len())))
}

/// Conservative low-tail quantile: the largest sample `x` such that at least
/// a `1 − p` fraction of samples is `>= x`, i.e. the `(n + 1 − k)`-th
/// smallest with `k = max(1, ceil((1 − p) * n))`.
///
/// Equals [`ecdf_quantile`]`(samples, p)` unless `p * n` is an integer, in
/// which case it is one rank higher.
pub fn ecdf_low_tail(samples: &[f64], p: f64) -> Result<f64, RobustError> {
    check(samples, p)?;
    let mut scratch = samples.to_vec();
    let n = samples.len();
    Ok(order_statistic(&mut scratch, n + 1 - rank(1.0 - p, n)))
}

/// Per-cell risk-averse voltage band communicated to nodes under M1.
#[derive(Clone, Debug, PartialEq)]
pub struct UBands {
    pub bus_ids: Vec<BusId>,
    pub horizon: usize,
    /// Indexed `i * horizon + t`.
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

/// `[U_L, U_H]` for every (bus, time) cell.
pub fn u_bands(v: &VoltageScenarioSet, cc: &CcConfig) -> Result<UBands, RobustError> {
    cc.validate()?;
    let tail = cc.tail();
    let n = v.n();
    let (k_low, k_high) = (n + 1 - rank(1.0 - tail, n), rank(1.0 - tail, n));
    let cells = v.bus_ids.len() * v.horizon;
    let mut scratch = vec![0.0; n];
    let mut low = Vec::with_capacity(cells);
    let mut high = Vec::with_capacity(cells);
    for cell in 0..cells {
        scratch.copy_from_slice(&v.data[cell * n..(cell + 1) * n]);
        high.push(order_statistic(&mut scratch, k_high));
        low.push(order_statistic(&mut scratch, k_low));
    }
    Ok(UBands {
        bus_ids: v.bus_ids.clone(),
        horizon: v.horizon,
        low,
        high,
    })
}

/// Envelopes from communicated voltage bands, computed locally per node.
pub fn m1_from_bands(policies: &Policies, bands: &UBands) -> Result<DoeSeries, RobustError> {
    policies.validate()?;
    let mut cells = Vec::with_capacity(bands.low.len());
    for (i, &bus) in bands.bus_ids.iter().enumerate() {
        let pair = policies.for_bus(bus);
        for t in 0..bands.horizon {
            let k = i * bands.horizon + t;
            let at_low = pair.cell(bands.low[k]);
            let at_high = pair.cell(bands.high[k]);
            cells.push(CellEnvelope {
                p: at_low.p.intersect(&at_high.p),
                q: at_low.q.intersect(&at_high.q),
            });
        }
    }
    Ok(DoeSeries::new(bands.bus_ids.clone(), bands.horizon, cells).expect("dense by construction"))
}

/// M1: chance constraint on the voltages, then envelopes.
pub fn m1_doe(policies: &Policies, v: &VoltageScenarioSet, cc: &CcConfig) -> Result<DoeSeries, RobustError> {
    m1_from_bands(policies, &u_bands(v, cc)?)
}

/// M2: envelopes for every scenario, then the chance constraint on the bounds.
pub fn m2_doe(policies: &Policies, v: &VoltageScenarioSet, cc: &CcConfig) -> Result<DoeSeries, RobustError> {
    m2_impl(policies, v, cc, false)
}

/// [`m2_doe`] with (bus, time) cells evaluated in parallel.
pub fn m2_doe_par(policies: &Policies, v: &VoltageScenarioSet, cc: &CcConfig) -> Result<DoeSeries, RobustError> {
    m2_impl(policies, v, cc, true)
}

/// [`m1_doe`] with (bus, time) cells evaluated in parallel.
pub fn m1_doe_par(policies: &Policies, v: &VoltageScenarioSet, cc: &CcConfig) -> Result<DoeSeries, RobustError> {
    cc.validate()?;
    policies.validate()?;
    let tail = cc.tail();
    let n = v.n();
    let (k_low, k_high) = (n + 1 - rank(1.0 - tail, n), rank(1.0 - tail, n));
    let cells: Vec<CellEnvelope> = (0..v.bus_ids.len() * v.horizon)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |scratch, cell| {
                scratch.copy_from_slice(&v.data[cell * n..(cell + 1) * n]);
                let high = order_statistic(scratch, k_high);
                let low = order_statistic(scratch, k_low);
                let pair = policies.for_bus(v.bus_ids[cell / v.horizon]);
                let (a, b) = (pair.cell(low), pair.cell(high));
                CellEnvelope {
                    p: a.p.intersect(&b.p),
                    q: a.q.intersect(&b.q),
                }
            },
        )
        .collect();
    Ok(DoeSeries::new(v.bus_ids.clone(), v.horizon, cells).expect("dense by construction"))
}

struct M2Scratch {
    p_lo: Vec<f64>,
    p_hi: Vec<f64>,
    q_lo: Vec<f64>,
    q_hi: Vec<f64>,
}

impl M2Scratch {
    fn new(n: usize) -> Self {
        M2Scratch {
            p_lo: vec![0.0; n],
            p_hi: vec![0.0; n],
            q_lo: vec![0.0; n],
            q_hi: vec![0.0; n],
        }
    }
}

fn m2_impl(policies: &Policies, v: &VoltageScenarioSet, cc: &CcConfig, parallel: bool) -> Result<DoeSeries, RobustError> {
    cc.validate()?;
    policies.validate()?;
    let tail = cc.tail();
    let n = v.n();
    // Upper bounds: low tail at `tail`. Lower bounds: high tail at `1 - tail`.
    let (k_upper, k_lower) = (n + 1 - rank(1.0 - tail, n), rank(1.0 - tail, n));
    let eval = |scratch: &mut M2Scratch, cell: usize| {
        let pair = policies.for_bus(v.bus_ids[cell / v.horizon]);
        for (s, &u) in v.data[cell * n..(cell + 1) * n].iter().enumerate() {
            let e = pair.cell(u);
            // Validated policies never produce empty envelopes.
            let (plo, phi) = e.p.bounds().expect("policy envelope is non-empty");
            let (qlo, qhi) = e.q.bounds().expect("policy envelope is non-empty");
            scratch.p_lo[s] = plo;
            scratch.p_hi[s] = phi;
            scratch.q_lo[s] = qlo;
            scratch.q_hi[s] = qhi;
        }
        CellEnvelope {
            p: Envelope::new(
                order_statistic(&mut scratch.p_lo, k_lower),
                order_statistic(&mut scratch.p_hi, k_upper),
            ),
            q: Envelope::new(
                order_statistic(&mut scratch.q_lo, k_lower),
                order_statistic(&mut scratch.q_hi, k_upper),
            ),
        }
    };
    let count = v.bus_ids.len() * v.horizon;
    let cells: Vec<CellEnvelope> = if parallel {
        (0..count)
            .into_par_iter()
            .map_init(|| M2Scratch::new(n), |scratch, cell| eval(scratch, cell))
            .collect()
    } else {
        let mut scratch = M2Scratch::new(n);
        (0..count).map(|cell| eval(&mut scratch, cell)).collect()
    };
    Ok(DoeSeries::new(v.bus_ids.clone(), v.horizon, cells).expect("dense by construction"))
}

/// Sum of absolute bound differences between two envelope series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeError {
    pub delta_p: f64,
    pub delta_q: f64,
    /// Cells left out of `delta_p` because either P envelope was empty.
    pub excluded_p: usize,
    pub excluded_q: usize,
}

/// L1 distance between the bounds of `a` and `b`, summed over all cells.
/// Cells where either side is empty are counted separately, not summed.
pub fn envelope_error(a: &DoeSeries, b: &DoeSeries) -> Result<EnvelopeError, RobustError> {
    if a.bus_ids() != b.bus_ids() || a.horizon() != b.horizon() {
        return Err(RobustError::IndexMismatch);
    }
    let mut out = EnvelopeError {
        delta_p: 0.0,
        delta_q: 0.0,
        excluded_p: 0,
        excluded_q: 0,
    };
    let diff = |x: &Envelope, y: &Envelope| match (x.bounds(), y.bounds()) {
        (Some((xl, xh)), Some((yl, yh))) => Some((xl - yl).abs() + (xh - yh).abs()),
        _ => None,
    };
    for (ca, cb) in a.cells().iter().zip(b.cells()) {
        match diff(&ca.p, &cb.p) {
            Some(d) => out.delta_p += d,
            None => out.excluded_p += 1,
        }
        match diff(&ca.q, &cb.q) {
            Some(d) => out.delta_q += d,
            None => out.excluded_q += 1,
        }
    }
    Ok(out)
}

/// Wall-clock comparison of M1 and M2 on identical in-memory inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n_scenarios: usize,
    pub n_buses: usize,
    pub horizon: usize,
    pub repetitions: usize,
    pub parallel: bool,
    /// Total over all timed repetitions.
    pub m1_ms: f64,
    pub m2_ms: f64,
    /// `m2_ms / m1_ms`.
    pub ratio: f64,
    pub m1_series_per_node: usize,
    pub m2_series_per_node: usize,
    pub m1_samples_ms: Vec<f64>,
    pub m2_samples_ms: Vec<f64>,
}

impl BenchmarkReport {
    /// True when M1 was faster than M2 in every repetition.
    pub fn m1_always_faster(&self) -> bool {
        self.m1_samples_ms
            .iter()
            .zip(&self.m2_samples_ms)
            .all(|(a, b)| a < b)
    }
}

/// Times both methods. One untimed warm-up run per method precedes
/// `repetitions` interleaved timed runs.
pub fn benchmark(
    policies: &Policies,
    v: &VoltageScenarioSet,
    cc: &CcConfig,
    repetitions: usize,
    parallel: bool,
) -> Result<BenchmarkReport, RobustError> {
    let repetitions = repetitions.max(1);
    let m1 = |p: &Policies, v: &VoltageScenarioSet, c: &CcConfig| {
        if parallel {
            m1_doe_par(p, v, c)
        } else {
            m1_doe(p, v, c)
        }
    };
    let m2 = |p: &Policies, v: &VoltageScenarioSet, c: &CcConfig| {
        if parallel {
            m2_doe_par(p, v, c)
        } else {
            m2_doe(p, v, c)
        }
    };
    black_box(m1(policies, v, cc)?);
    black_box(m2(policies, v, cc)?);

    let mut m1_samples = Vec::with_capacity(repetitions);
    let mut m2_samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        black_box(m1(black_box(policies), black_box(v), cc)?);
        m1_samples.push(start.elapsed().as_secs_f64() * 1e3);

        let start = Instant::now();
        black_box(m2(black_box(policies), black_box(v), cc)?);
        m2_samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let m1_ms: f64 = m1_samples.iter().sum();
    let m2_ms: f64 = m2_samples.iter().sum();
    Ok(BenchmarkReport {
        n_scenarios: v.n(),
        n_buses: v.bus_ids().len(),
        horizon: v.horizon(),
        repetitions,
        parallel,
        m1_ms,
        m2_ms,
        ratio: m2_ms / m1_ms,
        m1_series_per_node: 2,
        m2_series_per_node: v.n(),
        m1_samples_ms: m1_samples,
        m2_samples_ms: m2_samples,
    })
}

//! Voltage-dependent operating envelopes.
//!
//! An [`EnvelopePolicy`] projects a volt-watt or volt-var droop curve onto a
//! feasible power range. The voltage axis is split into five zones:
//!
//! ```text
//!   red  | yellow (low) |        green        | yellow (high) |  red
//! -------+--------------+---------------------+---------------+-------> u
//!      u_min     u_min + delta        u_max - delta         u_max
//! ```
//!
//! In the green band the full range `[x_min, x_max]` is available. In the
//! yellow bands one bound moves linearly with voltage and in the red zones the
//! range is clamped. Two policies are provided:
//!
//! * [`Mode::Anrc`] forbids only the voltage-worsening direction: under
//!   overvoltage the upper (injection) bound falls to zero, under undervoltage
//!   the lower (withdrawal) bound rises to zero.
//! * [`Mode::Prc`] drives the range toward the corrective limit: under
//!   overvoltage the upper bound falls all the way to `x_min`, collapsing to
//!   the point `[x_min, x_min]` at `u_max` and beyond.
//!
//! Power is injection positive throughout this module. A load profile
//! (consumption positive) maps onto it by a single negation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::BusId;

/// Fractions within this distance of a zone edge snap onto the edge. Decimal
/// parameters such as `0.92 + 0.04` do not land on `0.96` in binary, and the
/// green band must contain its nominal endpoints.
const EDGE_SNAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Avoiding negative reinforcement control.
    Anrc,
    /// Positive reinforcement control.
    Prc,
    /// Experimental PRC variant: corrective collapse inside the yellow bands,
    /// but the red zones release to the ANRC range. Not monotone in voltage.
    BandedPrc,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Anrc => "anrc",
            Mode::Prc => "prc",
            Mode::BandedPrc => "banded-prc",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePolicy {
    pub u_min: f64,
    pub u_max: f64,
    pub delta_perm: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub mode: Mode,
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("policy parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("u_min ({u_min}) must be below u_max ({u_max})")]
    VoltageOrder { u_min: f64, u_max: f64 },
    #[error("delta_perm must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("yellow bands overlap: u_min + delta_perm > u_max - delta_perm")]
    OverlappingBands,
    #[error("x_min ({x_min}) must not exceed x_max ({x_max})")]
    PowerOrder { x_min: f64, x_max: f64 },
    #[error("{mode} needs x_min <= 0 <= x_max, got [{x_min}, {x_max}]")]
    ZeroOutsideRange { mode: Mode, x_min: f64, x_max: f64 },
    #[error("voltage must be finite and positive, got {0}")]
    InvalidVoltage(f64),
}

impl EnvelopePolicy {
    /// Policy with the voltage limits used throughout the examples
    /// (0.92 / 1.08 pu, 0.04 pu band) and a ±1 pu range.
    pub fn standard(mode: Mode) -> Self {
        EnvelopePolicy {
            u_min: 0.92,
            u_max: 1.08,
            delta_perm: 0.04,
            x_min: -1.0,
            x_max: 1.0,
            mode,
        }
    }

    pub fn with_limits(mut self, x_min: f64, x_max: f64) -> Self {
        self.x_min = x_min;
        self.x_max = x_max;
        self
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, value) in [
            ("u_min", self.u_min),
            ("u_max", self.u_max),
            ("delta_perm", self.delta_perm),
            ("x_min", self.x_min),
            ("x_max", self.x_max),
        ] {
            if !value.is_finite() {
                return Err(PolicyError::NonFinite(name));
            }
        }
        if self.u_min >= self.u_max {
            return Err(PolicyError::VoltageOrder {
                u_min: self.u_min,
                u_max: self.u_max,
            });
        }
        if self.delta_perm <= 0.0 {
            return Err(PolicyError::NonPositiveDelta(self.delta_perm));
        }
        if self.u_min + self.delta_perm > self.u_max - self.delta_perm {
            return Err(PolicyError::OverlappingBands);
        }
        if self.x_min > self.x_max {
            return Err(PolicyError::PowerOrder {
                x_min: self.x_min,
                x_max: self.x_max,
            });
        }
        if matches!(self.mode, Mode::Anrc | Mode::BandedPrc) && !(self.x_min <= 0.0 && 0.0 <= self.x_max) {
            return Err(PolicyError::ZeroOutsideRange {
                mode: self.mode,
                x_min: self.x_min,
                x_max: self.x_max,
            });
        }
        Ok(())
    }

    /// The full, unrestricted range.
    pub fn full(&self) -> Envelope {
        Envelope::new(self.x_min, self.x_max)
    }

    /// Feasible range at voltage magnitude `u`.
    pub fn bounds(&self, u: f64) -> Result<Envelope, PolicyError> {
        self.validate()?;
        if !(u > 0.0 && u.is_finite()) {
            return Err(PolicyError::InvalidVoltage(u));
        }
        Ok(self.bounds_unchecked(u))
    }

    /// [`EnvelopePolicy::bounds`] without re-validating the policy. The caller
    /// guarantees a valid policy and a finite positive `u`.
    pub(crate) fn bounds_unchecked(&self, u: f64) -> Envelope {
        let (lo, hi) = (self.x_min, self.x_max);
        match self.zone(u) {
            Zone::Green => Envelope::new(lo, hi),
            Zone::HighYellow(f) => match self.mode {
                Mode::Anrc => Envelope::new(lo, hi * (1.0 - f)),
                Mode::Prc | Mode::BandedPrc => Envelope::new(lo, (hi + f * (lo - hi)).max(lo)),
            },
            Zone::HighRed => match self.mode {
                Mode::Anrc | Mode::BandedPrc => Envelope::new(lo, 0.0),
                Mode::Prc => Envelope::new(lo, lo),
            },
            Zone::LowYellow(f) => match self.mode {
                Mode::Anrc => Envelope::new(lo * (1.0 - f), hi),
                Mode::Prc | Mode::BandedPrc => Envelope::new((lo + f * (hi - lo)).min(hi), hi),
            },
            Zone::LowRed => match self.mode {
                Mode::Anrc | Mode::BandedPrc => Envelope::new(0.0, hi),
                Mode::Prc => Envelope::new(hi, hi),
            },
        }
    }

    pub fn zone(&self, u: f64) -> Zone {
        if u > self.u_max {
            return Zone::HighRed;
        }
        if u < self.u_min {
            return Zone::LowRed;
        }
        let high = snap((u - (self.u_max - self.delta_perm)) / self.delta_perm);
        if high > 0.0 {
            return Zone::HighYellow(high);
        }
        let low = snap(((self.u_min + self.delta_perm) - u) / self.delta_perm);
        if low > 0.0 {
            return Zone::LowYellow(low);
        }
        Zone::Green
    }
}

fn snap(f: f64) -> f64 {
    if f <= EDGE_SNAP {
        0.0
    } else if f >= 1.0 - EDGE_SNAP {
        1.0
    } else {
        f
    }
}

/// Voltage zone with the fractional depth into a yellow band, in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Zone {
    LowRed,
    LowYellow(f64),
    Green,
    HighYellow(f64),
    HighRed,
}

/// A closed power interval, possibly empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    Range { lower: f64, upper: f64 },
    Empty,
}

impl Envelope {
    /// `[lower, upper]`, or [`Envelope::Empty`] when the bounds cross.
    pub fn new(lower: f64, upper: f64) -> Envelope {
        if lower <= upper {
            Envelope::Range { lower, upper }
        } else {
            Envelope::Empty
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Envelope::Empty)
    }

    pub fn lower(&self) -> Option<f64> {
        match *self {
            Envelope::Range { lower, .. } => Some(lower),
            Envelope::Empty => None,
        }
    }

    pub fn upper(&self) -> Option<f64> {
        match *self {
            Envelope::Range { upper, .. } => Some(upper),
            Envelope::Empty => None,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Envelope::Range { lower, upper } => Some((lower, upper)),
            Envelope::Empty => None,
        }
    }

    /// Width of the interval; zero when empty.
    pub fn width(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| hi - lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.bounds().is_some_and(|(lo, hi)| lo <= x && x <= hi)
    }

    /// True if every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &Envelope) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    pub fn intersect(&self, other: &Envelope) -> Envelope {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => Envelope::new(a.max(c), b.min(d)),
            _ => Envelope::Empty,
        }
    }
}

/// Free-function form of [`Envelope::intersect`].
pub fn intersect(a: &Envelope, b: &Envelope) -> Envelope {
    a.intersect(b)
}

/// Free-function form of [`EnvelopePolicy::bounds`].
pub fn bounds(policy: &EnvelopePolicy, u: f64) -> Result<Envelope, PolicyError> {
    policy.bounds(u)
}

/// P and Q envelopes at one (bus, time) cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEnvelope {
    pub p: Envelope,
    pub q: Envelope,
}

/// Dense per-bus, per-timestep P and Q envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct DoeSeries {
    bus_ids: Vec<BusId>,
    horizon: usize,
    /// Indexed `i * horizon + t`.
    cells: Vec<CellEnvelope>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("expected {expected} cells, found {found}")]
    NotDense { expected: usize, found: usize },
    #[error("bus {0} appears twice")]
    DuplicateBus(BusId),
}

impl DoeSeries {
    pub fn new(bus_ids: Vec<BusId>, horizon: usize, cells: Vec<CellEnvelope>) -> Result<Self, SeriesError> {
        let expected = bus_ids.len() * horizon;
        if cells.len() != expected {
            return Err(SeriesError::NotDense {
                expected,
                found: cells.len(),
            });
        }
        let mut sorted = bus_ids.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(SeriesError::DuplicateBus(w[0]));
        }
        Ok(DoeSeries {
            bus_ids,
            horizon,
            cells,
        })
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.bus_ids
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Cell for the `i`-th bus of [`DoeSeries::bus_ids`] at step `t`.
    pub fn get(&self, i: usize, t: usize) -> &CellEnvelope {
        &self.cells[i * self.horizon + t]
    }

    pub fn cell(&self, bus: BusId, t: usize) -> Option<&CellEnvelope> {
        let i = self.bus_ids.iter().position(|&b| b == bus)?;
        (t < self.horizon).then(|| self.get(i, t))
    }

    /// All cells as `(bus, t, cell)` in bus-major order.
    pub fn iter(&self) -> impl Iterator<Item = (BusId, usize, &CellEnvelope)> + '_ {
        self.cells.iter().enumerate().map(move |(k, c)| {
            (self.bus_ids[k / self.horizon], k % self.horizon, c)
        })
    }

    pub fn cells(&self) -> &[CellEnvelope] {
        &self.cells
    }
}

/// P and Q policies applied at one bus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyPair {
    pub p: EnvelopePolicy,
    pub q: EnvelopePolicy,
}

impl PolicyPair {
    /// ANRC for active power, PRC for reactive power.
    pub fn standard() -> Self {
        PolicyPair {
            p: EnvelopePolicy::standard(Mode::Anrc),
            q: EnvelopePolicy::standard(Mode::Prc),
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.p.validate()?;
        self.q.validate()
    }

    pub(crate) fn cell(&self, u: f64) -> CellEnvelope {
        CellEnvelope {
            p: self.p.bounds_unchecked(u),
            q: self.q.bounds_unchecked(u),
        }
    }
}

/// Global default policy pair with optional per-bus overrides.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Policies {
    pub default: PolicyPair,
    #[serde(default)]
    pub overrides: Vec<(BusId, PolicyPair)>,
}

impl Default for PolicyPair {
    fn default() -> Self {
        PolicyPair::standard()
    }
}

impl Policies {
    pub fn uniform(pair: PolicyPair) -> Self {
        Policies {
            default: pair,
            overrides: Vec::new(),
        }
    }

    pub fn with_override(mut self, bus: BusId, pair: PolicyPair) -> Self {
        self.overrides.retain(|(b, _)| *b != bus);
        self.overrides.push((bus, pair));
        self
    }

    pub fn for_bus(&self, bus: BusId) -> &PolicyPair {
        self.overrides
            .iter()
            .find(|(b, _)| *b == bus)
            .map_or(&self.default, |(_, pair)| pair)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.default.validate()?;
        self.overrides.iter().try_for_each(|(_, pair)| pair.validate())
    }
}

/// Measured voltage magnitudes per bus over a common horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct VoltageSeries {
    pub bus_ids: Vec<BusId>,
    pub horizon: usize,
    /// Indexed `i * horizon + t`.
    pub values: Vec<f64>,
}

impl VoltageSeries {
    pub fn series(&self, i: usize) -> &[f64] {
        &self.values[i * self.horizon..(i + 1) * self.horizon]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RtDoeError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("bus {bus} at t={t}: voltage {value} is not a positive number")]
    Voltage { bus: BusId, t: usize, value: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Real-time envelopes from local voltage measurements.
///
/// Each bus uses only its own series, so the result for one bus is unaffected
/// by any other bus's data.
pub fn rt_doe(policies: &Policies, v: &VoltageSeries) -> Result<DoeSeries, RtDoeError> {
    policies.validate()?;
    let mut cells = Vec::with_capacity(v.values.len());
    for (i, &bus) in v.bus_ids.iter().enumerate() {
        let pair = policies.for_bus(bus);
        for (t, &u) in v.series(i).iter().enumerate() {
            if !(u > 0.0 && u.is_finite()) {
                return Err(RtDoeError::Voltage { bus, t, value: u });
            }
            cells.push(pair.cell(u));
        }
    }
    Ok(DoeSeries::new(v.bus_ids.clone(), v.horizon, cells)?)
}

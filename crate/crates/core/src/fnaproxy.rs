//! Envelope shrinkage as an indicator of flexibility need.
//!
//! For each cell the shrinkage is `1 − width / (x_max − x_min)`: zero for the
//! full policy range, one for an empty or single-point envelope.

use thiserror::Error;

use crate::envelope::{DoeSeries, Envelope, EnvelopePolicy, Policies};
use crate::netmodel::BusId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shrinkage {
    pub s_p: f64,
    pub s_q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkageSeries {
    pub bus_ids: Vec<BusId>,
    pub horizon: usize,
    /// Indexed `i * horizon + t`.
    pub values: Vec<Shrinkage>,
}

impl ShrinkageSeries {
    pub fn get(&self, i: usize, t: usize) -> Shrinkage {
        self.values[i * self.horizon + t]
    }

    /// Per-step sum over buses, the temporal profile of flexibility need.
    pub fn temporal_p(&self) -> Vec<f64> {
        (0..self.horizon)
            .map(|t| (0..self.bus_ids.len()).map(|i| self.get(i, t).s_p).sum())
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ShrinkageError {
    #[error("bus {bus}: policy range [{x_min}, {x_max}] has no width")]
    DegenerateRange { bus: BusId, x_min: f64, x_max: f64 },
}

fn relative(envelope: &Envelope, policy: &EnvelopePolicy) -> f64 {
    let full = policy.x_max - policy.x_min;
    (1.0 - envelope.width() / full).clamp(0.0, 1.0)
}

pub fn shrinkage(doe: &DoeSeries, policies: &Policies) -> Result<ShrinkageSeries, ShrinkageError> {
    let mut values = Vec::with_capacity(doe.cells().len());
    for (bus, _, cell) in doe.iter() {
        let pair = policies.for_bus(bus);
        for policy in [&pair.p, &pair.q] {
            if !(policy.x_max > policy.x_min) {
                return Err(ShrinkageError::DegenerateRange {
                    bus,
                    x_min: policy.x_min,
                    x_max: policy.x_max,
                });
            }
        }
        values.push(Shrinkage {
            s_p: relative(&cell.p, &pair.p),
            s_q: relative(&cell.q, &pair.q),
        });
    }
    Ok(ShrinkageSeries {
        bus_ids: doe.bus_ids().to_vec(),
        horizon: doe.horizon(),
        values,
    })
}

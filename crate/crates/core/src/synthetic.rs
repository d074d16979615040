//! Synthetic 76-bus low-voltage feeder with 24-hour load profiles.
//!
//! Topology: a 30-segment trunk from the substation (bus 0) with three
//! 15-bus laterals tapped at trunk buses 8, 15 and 22, giving 76 buses and
//! 75 branches. Fifty-two households are connected at 28 buses; 24 of those
//! buses serve two households and four serve one. Roughly half the
//! households have rooftop PV, so midday net injection raises voltages at the
//! far ends of the laterals while the evening peak pulls them down.
//!
//! Base: 0.4 kV, 100 kVA.

use crate::netmodel::{Base, Branch, Bus, BusId, LoadProfile, Network};

pub const BUSES: usize = 76;
pub const HORIZON: usize = 24;

const TRUNK_LEN: u32 = 30;
const LATERAL_LEN: u32 = 15;
const TAPS: [u32; 3] = [8, 15, 22];

const TRUNK_Z: (f64, f64) = (0.0011, 0.0006);
const LATERAL_Z: (f64, f64) = (0.0025, 0.0011);

/// Buses with households, and the number of households at each.
const LOAD_BUSES: [(u32, u32); 28] = [
    (3, 2),
    (6, 2),
    (10, 2),
    (13, 1),
    (17, 2),
    (20, 2),
    (24, 2),
    (27, 2),
    (29, 1),
    (30, 2),
    (33, 2),
    (36, 2),
    (39, 2),
    (42, 2),
    (45, 2),
    (48, 2),
    (50, 1),
    (52, 2),
    (55, 2),
    (58, 2),
    (60, 2),
    (63, 2),
    (66, 2),
    (68, 1),
    (70, 2),
    (72, 2),
    (74, 2),
    (75, 2),
];

/// Normalized household demand per hour, peak 1.0 in the evening.
const DEMAND_SHAPE: [f64; HORIZON] = [
    0.35, 0.30, 0.28, 0.27, 0.28, 0.35, 0.55, 0.75, 0.65, 0.50, 0.45, 0.45, 0.48, 0.45, 0.42, 0.45,
    0.55, 0.75, 0.95, 1.00, 0.90, 0.75, 0.55, 0.42,
];

const HOUSEHOLD_PEAK_PU: f64 = 0.045;
const PV_PEAK_PU: f64 = 0.12;
const Q_RATIO: f64 = 0.3;

fn pv_shape(hour: usize) -> f64 {
    let h = hour as f64;
    if (6.0..=19.0).contains(&h) {
        let x = (h - 12.5) / 3.2;
        (-0.5 * x * x).exp()
    } else {
        0.0
    }
}

/// Network of the synthetic feeder.
pub fn feeder76() -> Network {
    let load_buses: Vec<u32> = LOAD_BUSES.iter().map(|&(b, _)| b).collect();
    let buses = (0..BUSES as u32)
        .map(|id| Bus {
            id: BusId(id),
            name: match id {
                0 => "substation".to_string(),
                1..=TRUNK_LEN => format!("trunk-{id}"),
                _ => format!("lateral-{}-{}", (id - TRUNK_LEN - 1) / LATERAL_LEN, (id - TRUNK_LEN - 1) % LATERAL_LEN + 1),
            },
            slack: id == 0,
            has_load: load_buses.contains(&id),
        })
        .collect();

    let mut branches = Vec::with_capacity(BUSES - 1);
    let branch = |from: u32, to: u32, (r, x): (f64, f64)| Branch {
        from_bus: BusId(from),
        to_bus: BusId(to),
        r,
        x,
    };
    for id in 1..=TRUNK_LEN {
        branches.push(branch(id - 1, id, TRUNK_Z));
    }
    for (k, &tap) in TAPS.iter().enumerate() {
        let first = TRUNK_LEN + 1 + k as u32 * LATERAL_LEN;
        branches.push(branch(tap, first, LATERAL_Z));
        for id in first + 1..first + LATERAL_LEN {
            branches.push(branch(id - 1, id, LATERAL_Z));
        }
    }

    Network {
        buses,
        branches,
        base: Base {
            v_base_kv: 0.4,
            s_base_kva: 100.0,
        },
        slack_voltage: 1.0,
    }
}

/// Nominal 24-hour net load per load bus (consumption positive).
pub fn feeder76_profiles() -> Vec<LoadProfile> {
    let mut household = 0usize;
    LOAD_BUSES
        .iter()
        .map(|&(bus, count)| {
            let mut p = vec![0.0; HORIZON];
            let mut q = vec![0.0; HORIZON];
            for _ in 0..count {
                // Deterministic spread of household size and PV ownership.
                let scale = 0.8 + 0.4 * ((household * 7 % 11) as f64 / 10.0);
                let has_pv = household % 2 == 0 || bus >= 60;
                for h in 0..HORIZON {
                    let demand = HOUSEHOLD_PEAK_PU * scale * DEMAND_SHAPE[h];
                    let pv = if has_pv { PV_PEAK_PU * pv_shape(h) } else { 0.0 };
                    p[h] += demand - pv;
                    q[h] += Q_RATIO * demand;
                }
                household += 1;
            }
            LoadProfile { bus_id: BusId(bus), p, q }
        })
        .collect()
}

/// Total number of households served.
pub fn households() -> u32 {
    LOAD_BUSES.iter().map(|&(_, c)| c).sum()
}

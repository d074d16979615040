//! Test oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use doe_core::netmodel::{Base, Branch, Bus, BusId, Network};
use doe_core::robust::VoltageScenarioSet;
use doe_core::Complex64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every labeled tree on `n` vertices, decoded from all Prüfer sequences.
pub fn all_labeled_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return vec![Vec::new()];
    }
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            prufer_decode(&seq, n)
        })
        .collect()
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&k| degree[k] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&k| degree[k] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Builds a network on buses `0..n` with bus 0 as slack. Edges are oriented
/// arbitrarily; the solver must not depend on orientation.
pub fn network_from_edges(n: usize, edges: &[(usize, usize)], z: &[(f64, f64)]) -> Network {
    Network {
        buses: (0..n)
            .map(|k| Bus {
                id: BusId(k as u32),
                name: format!("b{k}"),
                slack: k == 0,
                has_load: k != 0,
            })
            .collect(),
        branches: edges
            .iter()
            .zip(z)
            .map(|(&(a, b), &(r, x))| Branch {
                from_bus: BusId(a as u32),
                to_bus: BusId(b as u32),
                r,
                x,
            })
            .collect(),
        base: Base::default(),
        slack_voltage: 1.0,
    }
}

/// Z-bus fixed-point oracle, independent of the sweep: builds the nodal
/// admittance matrix, eliminates the slack, and iterates
/// `V = Z (I(V) − Y_ns V_s)` with `I = −conj(S_load / V)` to machine precision.
/// Returns `None` if the iteration fails to settle.
pub fn zbus_oracle(net: &Network, loads: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = net.buses.len();
    let idx = |id: BusId| net.index_of(id).unwrap();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for br in &net.branches {
        let (a, b) = (idx(br.from_bus), idx(br.to_bus));
        let yb = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        y[(a, a)] += yb;
        y[(b, b)] += yb;
        y[(a, b)] -= yb;
        y[(b, a)] -= yb;
    }
    let slack = net.buses.iter().position(|b| b.slack)?;
    let others: Vec<usize> = (0..n).filter(|&k| k != slack).collect();
    let m = others.len();
    let vs = Complex64::new(net.slack_voltage, 0.0);
    let ynn = DMatrix::from_fn(m, m, |r, c| y[(others[r], others[c])]);
    let z = ynn.try_inverse()?;
    let yns: Vec<Complex64> = others.iter().map(|&k| y[(k, slack)] * vs).collect();

    let mut v = vec![vs; m];
    for _ in 0..10_000 {
        let rhs: Vec<Complex64> = (0..m)
            .map(|r| -(loads[others[r]] / v[r]).conj() - yns[r])
            .collect();
        let next: Vec<Complex64> = (0..m)
            .map(|r| (0..m).map(|c| z[(r, c)] * rhs[c]).sum())
            .collect();
        let step = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        v = next;
        if step < 1e-15 {
            let mut full = vec![vs; n];
            for (r, &k) in others.iter().enumerate() {
                full[k] = v[r];
            }
            return Some(full);
        }
        if !step.is_finite() {
            return None;
        }
    }
    None
}

/// Scenario voltages drawn uniformly from `[lo, hi]`; continuous draws make
/// ties at the quantile ranks a probability-zero event.
pub fn random_voltages(
    rng: &mut ChaCha8Rng,
    n: usize,
    buses: usize,
    horizon: usize,
    lo: f64,
    hi: f64,
) -> VoltageScenarioSet {
    let values: Vec<f64> = (0..n * buses * horizon)
        .map(|_| rng.random_range(lo..hi))
        .collect();
    let ids = (0..buses as u32).map(BusId).collect();
    VoltageScenarioSet::new(n, ids, horizon, &values).unwrap()
}

/// Scenario voltages with a per-cell random center and spread, so that
/// different cells land in different zones.
pub fn spread_voltages(rng: &mut ChaCha8Rng, n: usize, buses: usize, horizon: usize) -> VoltageScenarioSet {
    let cells = buses * horizon;
    let centers: Vec<(f64, f64)> = (0..cells)
        .map(|_| (rng.random_range(0.88..1.12), rng.random_range(0.002..0.05)))
        .collect();
    let mut values = vec![0.0; n * cells];
    for s in 0..n {
        for c in 0..cells {
            let (mu, w) = centers[c];
            values[s * cells + c] = mu + w * rng.random_range(-1.0..1.0);
        }
    }
    let ids = (0..buses as u32).map(BusId).collect();
    VoltageScenarioSet::new(n, ids, horizon, &values).unwrap()
}

//! Backward-forward sweep power flow for radial feeders.
//!
//! Loads are constant-power (PQ), consumption positive, per-unit. The solver
//! starts flat (every bus at the slack voltage) and iterates current summation
//! up the tree followed by voltage drops down the tree until both the
//! successive-iterate voltage change and the nodal power mismatch fall below
//! the tolerance.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::netmodel::{validate_radial, BusId, Network, Violation};
use crate::robust::VoltageScenarioSet;
use crate::scenario::ScenarioSet;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("network is not radial: {0:?}")]
    InvalidNetwork(Vec<Violation>),
    #[error("branch {branch} has zero impedance; the sweep is singular")]
    Singular { branch: usize },
    #[error("expected {expected} bus loads, got {found}")]
    LoadLength { expected: usize, found: usize },
    #[error("load at bus {0} is not finite")]
    NonFiniteLoad(BusId),
    #[error("scenario bus {0} is not in the network")]
    UnknownScenarioBus(BusId),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Result of a single power flow.
#[derive(Clone, Debug, PartialEq)]
pub struct VoltageSolution {
    /// Complex bus voltages in network bus order.
    pub v: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest nodal complex-power residual magnitude, per-unit.
    pub max_mismatch: f64,
}

impl VoltageSolution {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.norm()).collect()
    }
}

/// Precomputed sweep ordering for one network.
#[derive(Clone, Debug)]
pub struct RadialSolver {
    bus_ids: Vec<BusId>,
    slack: usize,
    slack_voltage: f64,
    /// Breadth-first order from the slack; parents always precede children.
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    /// Series impedance of the branch joining each bus to its parent.
    z: Vec<Complex64>,
    options: SolverOptions,
}

impl RadialSolver {
    pub fn new(network: &Network) -> Result<Self, PowerFlowError> {
        if let Err(violations) = validate_radial(network) {
            if let Some(branch) = violations.iter().find_map(|v| match v {
                Violation::InvalidImpedance { branch, r, x } if *r == 0.0 && *x == 0.0 => {
                    Some(*branch)
                }
                _ => None,
            }) {
                return Err(PowerFlowError::Singular { branch });
            }
            return Err(PowerFlowError::InvalidNetwork(violations));
        }
        let n = network.len();
        let index = |id: BusId| network.index_of(id).expect("validated");
        let slack = index(network.slack_bus().expect("validated"));

        let mut adjacency: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for branch in &network.branches {
            let (a, b) = (index(branch.from_bus), index(branch.to_bus));
            let z = Complex64::new(branch.r, branch.x);
            adjacency[a].push((b, z));
            adjacency[b].push((a, z));
        }

        let mut parent = vec![None; n];
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        visited[slack] = true;
        order.push(slack);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &(v, zv) in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some(u);
                    z[v] = zv;
                    order.push(v);
                }
            }
        }

        Ok(RadialSolver {
            bus_ids: network.bus_ids(),
            slack,
            slack_voltage: network.slack_voltage,
            order,
            parent,
            z,
            options: SolverOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.bus_ids
    }

    /// Solves for one load snapshot given in network bus order.
    pub fn solve(&self, loads: &[Complex64]) -> Result<VoltageSolution, PowerFlowError> {
        let n = self.bus_ids.len();
        if loads.len() != n {
            return Err(PowerFlowError::LoadLength {
                expected: n,
                found: loads.len(),
            });
        }
        if let Some(i) = loads.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(PowerFlowError::NonFiniteLoad(self.bus_ids[i]));
        }

        let v_slack = Complex64::new(self.slack_voltage, 0.0);
        let mut v = vec![v_slack; n];
        let mut current = vec![Complex64::new(0.0, 0.0); n];
        let tol = self.options.tolerance;
        let mut mismatch = f64::INFINITY;

        for iteration in 1..=self.options.max_iterations {
            // Backward sweep: load current plus everything downstream.
            for &i in &self.order {
                current[i] = (loads[i] / v[i]).conj();
            }
            for &i in self.order.iter().rev() {
                if let Some(p) = self.parent[i] {
                    let downstream = current[i];
                    current[p] += downstream;
                }
            }
            // Forward sweep.
            let mut dv: f64 = 0.0;
            for &i in self.order.iter().skip(1) {
                let p = self.parent[i].expect("non-slack bus has a parent");
                let updated = v[p] - self.z[i] * current[i];
                dv = dv.max((updated - v[i]).norm());
                v[i] = updated;
            }
            if v.iter().any(|x| !(x.re.is_finite() && x.im.is_finite()) || x.norm() == 0.0) {
                return Ok(self.diverged(iteration));
            }
            mismatch = self.max_mismatch(&v, loads);
            if dv <= tol && mismatch <= tol {
                return Ok(VoltageSolution {
                    v,
                    converged: true,
                    iterations: iteration,
                    max_mismatch: mismatch,
                });
            }
        }
        Ok(VoltageSolution {
            v,
            converged: false,
            iterations: self.options.max_iterations,
            max_mismatch: mismatch,
        })
    }

    fn diverged(&self, iteration: usize) -> VoltageSolution {
        VoltageSolution {
            v: vec![Complex64::new(f64::NAN, f64::NAN); self.bus_ids.len()],
            converged: false,
            iterations: iteration,
            max_mismatch: f64::INFINITY,
        }
    }

    /// Per-bus complex-power residual |S_branch − S_load| obtained by
    /// substituting `v` into the branch equations. The slack entry is zero.
    pub fn residuals(&self, v: &[Complex64], loads: &[Complex64]) -> Vec<f64> {
        let n = self.bus_ids.len();
        // Net current absorbed at each bus = inflow from parent − outflow to children.
        let mut absorbed = vec![Complex64::new(0.0, 0.0); n];
        for &i in self.order.iter().skip(1) {
            let p = self.parent[i].expect("non-slack bus has a parent");
            let flow = (v[p] - v[i]) / self.z[i];
            absorbed[i] += flow;
            absorbed[p] -= flow;
        }
        (0..n)
            .map(|i| {
                if i == self.slack {
                    0.0
                } else {
                    (v[i] * absorbed[i].conj() - loads[i]).norm()
                }
            })
            .collect()
    }

    fn max_mismatch(&self, v: &[Complex64], loads: &[Complex64]) -> f64 {
        self.residuals(v, loads).into_iter().fold(0.0, f64::max)
    }
}

/// One-shot solve with default options.
pub fn solve(network: &Network, loads: &[Complex64]) -> Result<VoltageSolution, PowerFlowError> {
    RadialSolver::new(network)?.solve(loads)
}

/// A (scenario, timestep) cell whose power flow did not converge.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub scenario: usize,
    pub t: usize,
    pub iterations: usize,
    pub max_mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct BatchOutput {
    pub voltages: VoltageScenarioSet,
    /// Non-converged cells in (scenario, t) order. Their magnitudes are still
    /// written into `voltages` from the final iterate.
    pub failures: Vec<CellFailure>,
}

/// Runs one power flow per (scenario, timestep).
///
/// `workers` caps the thread count (`None` uses the rayon default). Output
/// layout and failure ordering depend only on indices, so results are
/// bit-identical across worker counts.
pub fn batch_solve(
    network: &Network,
    scenarios: &ScenarioSet,
    workers: Option<usize>,
) -> Result<BatchOutput, PowerFlowError> {
    let solver = RadialSolver::new(network)?;
    let n_bus = network.len();
    let horizon = scenarios.horizon();
    let columns: Vec<usize> = scenarios
        .bus_ids()
        .iter()
        .map(|&id| network.index_of(id).ok_or(PowerFlowError::UnknownScenarioBus(id)))
        .collect::<Result<_, _>>()?;

    let cells = scenarios.n() * horizon;
    let run_cell = |cell: usize| {
        let (s, t) = (cell / horizon, cell % horizon);
        let mut loads = vec![Complex64::new(0.0, 0.0); n_bus];
        for (k, &col) in columns.iter().enumerate() {
            loads[col] = scenarios.get(s, k, t);
        }
        solver.solve(&loads)
    };

    let results: Vec<Result<VoltageSolution, PowerFlowError>> = match workers {
        Some(1) => (0..cells).map(run_cell).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(w) = workers {
                builder = builder.num_threads(w);
            }
            let pool = builder
                .build()
                .map_err(|e| PowerFlowError::Pool(e.to_string()))?;
            pool.install(|| (0..cells).into_par_iter().map(run_cell).collect())
        }
    };

    let mut data = vec![0.0; scenarios.n() * n_bus * horizon];
    let mut failures = Vec::new();
    let stride = scenarios.n();
    for (cell, result) in results.into_iter().enumerate() {
        let solution = result?;
        let (s, t) = (cell / horizon, cell % horizon);
        if !solution.converged {
            failures.push(CellFailure {
                scenario: s,
                t,
                iterations: solution.iterations,
                max_mismatch: solution.max_mismatch,
            });
        }
        for (i, v) in solution.v.iter().enumerate() {
            data[(i * horizon + t) * stride + s] = v.norm();
        }
    }
    let voltages = VoltageScenarioSet::from_cell_major(scenarios.n(), network.bus_ids(), horizon, data);
    Ok(BatchOutput { voltages, failures })
}

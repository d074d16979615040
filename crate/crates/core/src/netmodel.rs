//! Radial distribution-network data model.
//!
//! A [`Network`] is a single-phase, positive-sequence, per-unit description of
//! a feeder: buses, series branches and one slack bus. Networks are read from a
//! self-describing JSON file (see [`load_network`]) and must pass
//! [`validate_radial`] before a power flow can run on them.
//!
//! Load values use the consumption-positive convention: a positive `p` draws
//! active power from the grid. The envelope module works in the opposite
//! (injection-positive) direction.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer bus identifier as it appears in input files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub slack: bool,
    #[serde(default)]
    pub has_load: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    #[serde(rename = "r_pu")]
    pub r: f64,
    #[serde(rename = "x_pu")]
    pub x: f64,
}

/// System base quantities. Only carried through for reporting; every
/// computation in this crate is per-unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Base {
    pub v_base_kv: f64,
    pub s_base_kva: f64,
}

impl Default for Base {
    fn default() -> Self {
        Base {
            v_base_kv: 0.4,
            s_base_kva: 100.0,
        }
    }
}

fn default_slack_voltage() -> f64 {
    1.0
}

/// A distribution network as read from disk.
///
/// The struct itself does not enforce radiality; use [`validate_radial`] (or
/// [`load_network`], which calls it) before handing a network to the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub base: Base,
    #[serde(default = "default_slack_voltage")]
    pub slack_voltage: f64,
}

impl Network {
    /// The designated slack bus, if exactly one bus carries the flag.
    pub fn slack_bus(&self) -> Option<BusId> {
        let mut slack = self.buses.iter().filter(|b| b.slack);
        match (slack.next(), slack.next()) {
            (Some(b), None) => Some(b.id),
            _ => None,
        }
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Position of `id` in [`Network::buses`].
    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetworkError> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Network, NetworkError> {
        let network: Network = serde_json::from_str(text).map_err(NetworkError::Parse)?;
        validate_radial(&network).map_err(NetworkError::Invalid)?;
        Ok(network)
    }
}

/// One structural problem found by [`validate_radial`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateBusId(BusId),
    NoSlack,
    MultipleSlack(Vec<BusId>),
    UnknownBus { branch: usize, bus: BusId },
    SelfLoop { branch: usize, bus: BusId },
    InvalidImpedance { branch: usize, r: f64, x: f64 },
    BranchCount { buses: usize, branches: usize },
    Cycle { branch: usize },
    Disconnected { unreached: Vec<BusId> },
    NonPositiveSlackVoltage(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateBusId(id) => write!(f, "duplicate bus id {id}"),
            Violation::NoSlack => write!(f, "no slack bus designated"),
            Violation::MultipleSlack(ids) => write!(f, "multiple slack buses: {ids:?}"),
            Violation::UnknownBus { branch, bus } => {
                write!(f, "branch {branch} references unknown bus {bus}")
            }
            Violation::SelfLoop { branch, bus } => {
                write!(f, "branch {branch} connects bus {bus} to itself")
            }
            Violation::InvalidImpedance { branch, r, x } => {
                write!(f, "branch {branch} has invalid impedance r={r} x={x}")
            }
            Violation::BranchCount { buses, branches } => write!(
                f,
                "radial network with {buses} buses needs {} branches, found {branches}",
                buses.saturating_sub(1)
            ),
            Violation::Cycle { branch } => write!(f, "branch {branch} closes a cycle"),
            Violation::Disconnected { unreached } => {
                write!(f, "buses not reachable from slack: {unreached:?}")
            }
            Violation::NonPositiveSlackVoltage(v) => write!(f, "slack voltage {v} is not positive"),
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("network is not a valid radial feeder: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reads and validates a network file.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Network::from_json(&text)
}

/// Checks that `network` is a connected tree rooted at a single slack bus.
///
/// Every violation found is reported; the function never panics on bad input.
pub fn validate_radial(network: &Network) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    let mut seen = HashSet::new();
    for bus in &network.buses {
        if !seen.insert(bus.id) {
            violations.push(Violation::DuplicateBusId(bus.id));
        }
    }

    let slacks: Vec<BusId> = network
        .buses
        .iter()
        .filter(|b| b.slack)
        .map(|b| b.id)
        .collect();
    match slacks.len() {
        0 => violations.push(Violation::NoSlack),
        1 => {}
        _ => violations.push(Violation::MultipleSlack(slacks.clone())),
    }
    if !(network.slack_voltage > 0.0 && network.slack_voltage.is_finite()) {
        violations.push(Violation::NonPositiveSlackVoltage(network.slack_voltage));
    }

    if network.branches.len() + 1 != network.buses.len() {
        violations.push(Violation::BranchCount {
            buses: network.buses.len(),
            branches: network.branches.len(),
        });
    }

    let index: HashMap<BusId, usize> = network
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut parent: Vec<usize> = (0..network.buses.len()).collect();
    let mut adjacency = vec![Vec::new(); network.buses.len()];

    for (k, branch) in network.branches.iter().enumerate() {
        let valid_impedance = branch.r >= 0.0
            && branch.x >= 0.0
            && branch.r.is_finite()
            && branch.x.is_finite()
            && (branch.r > 0.0 || branch.x > 0.0);
        if !valid_impedance {
            violations.push(Violation::InvalidImpedance {
                branch: k,
                r: branch.r,
                x: branch.x,
            });
        }
        if branch.from_bus == branch.to_bus {
            violations.push(Violation::SelfLoop {
                branch: k,
                bus: branch.from_bus,
            });
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(&branch.from_bus), index.get(&branch.to_bus)) else {
            for id in [branch.from_bus, branch.to_bus] {
                if !index.contains_key(&id) {
                    violations.push(Violation::UnknownBus { branch: k, bus: id });
                }
            }
            continue;
        };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            violations.push(Violation::Cycle { branch: k });
        } else {
            parent[ra] = rb;
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    if let [root] = slacks.as_slice() {
        let start = index[root];
        let mut reached = vec![false; network.buses.len()];
        reached[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !reached[v] {
                    reached[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let unreached: Vec<BusId> = network
            .buses
            .iter()
            .zip(&reached)
            .filter(|(_, r)| !**r)
            .map(|(b, _)| b.id)
            .collect();
        if !unreached.is_empty() {
            violations.push(Violation::Disconnected { unreached });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Per-bus load time series, per-unit, consumption positive.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProfile {
    pub bus_id: BusId,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LoadProfile {
    pub fn horizon(&self) -> usize {
        self.p.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("load profile references bus {0} which is not in the network")]
    UnknownBus(BusId),
    #[error("load profiles disagree on horizon: bus {bus} has {found} steps, expected {expected}")]
    HorizonMismatch {
        bus: BusId,
        expected: usize,
        found: usize,
    },
    #[error("bus {0} has more than one load profile")]
    Duplicate(BusId),
    #[error("no load profiles supplied")]
    Empty,
}

/// Checks a profile set against a network: known buses, one profile per bus,
/// and a common horizon, which is returned.
pub fn check_profiles(network: &Network, profiles: &[LoadProfile]) -> Result<usize, ProfileError> {
    let first = profiles.first().ok_or(ProfileError::Empty)?;
    let horizon = first.horizon();
    let mut seen = HashSet::new();
    for profile in profiles {
        if network.index_of(profile.bus_id).is_none() {
            return Err(ProfileError::UnknownBus(profile.bus_id));
        }
        if !seen.insert(profile.bus_id) {
            return Err(ProfileError::Duplicate(profile.bus_id));
        }
        if profile.p.len() != horizon || profile.q.len() != horizon {
            return Err(ProfileError::HorizonMismatch {
                bus: profile.bus_id,
                expected: horizon,
                found: profile.p.len().min(profile.q.len()),
            });
        }
    }
    Ok(horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bus(id: u32, slack: bool) -> Bus {
        Bus {
            id: BusId(id),
            name: format!("b{id}"),
            slack,
            has_load: false,
        }
    }

    fn branch(from: u32, to: u32) -> Branch {
        Branch {
            from_bus: BusId(from),
            to_bus: BusId(to),
            r: 0.01,
            x: 0.01,
        }
    }

    fn network(buses: Vec<Bus>, branches: Vec<Branch>) -> Network {
        Network {
            buses,
            branches,
            base: Base::default(),
            slack_voltage: 1.0,
        }
    }

    #[test]
    fn minimal_two_bus_file_loads() {
        let text = r#"{
            "buses": [{"id": 0, "name": "src", "slack": true}, {"id": 1, "name": "l1", "slack": false}],
            "branches": [{"from": 0, "to": 1, "r_pu": 0.01, "x_pu": 0.01}],
            "base": {"v_base_kv": 0.4, "s_base_kva": 100.0}
        }"#;
        let net = Network::from_json(text).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches.len(), 1);
        assert_eq!(net.slack_bus(), Some(BusId(0)));
        assert_eq!(net.slack_voltage, 1.0);
    }

    #[test]
    fn cycle_is_rejected() {
        let text = r#"{
            "buses": [{"id": 0, "slack": true}, {"id": 1}, {"id": 2}],
            "branches": [
                {"from": 0, "to": 1, "r_pu": 0.01, "x_pu": 0.01},
                {"from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.01},
                {"from": 2, "to": 0, "r_pu": 0.01, "x_pu": 0.01}
            ],
            "base": {"v_base_kv": 0.4, "s_base_kva": 100.0}
        }"#;
        match Network::from_json(text) {
            Err(NetworkError::Invalid(v)) => {
                assert!(v.contains(&Violation::Cycle { branch: 2 }), "{v:?}")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            Network::from_json("{\"buses\": [}"),
            Err(NetworkError::Parse(_))
        ));
    }

    #[test]
    fn disconnected_network() {
        let net = network(
            vec![bus(0, true), bus(1, false), bus(2, false), bus(3, false)],
            vec![branch(0, 1), branch(2, 3)],
        );
        let v = validate_radial(&net).unwrap_err();
        assert!(v.iter().any(|x| matches!(x, Violation::Disconnected { unreached } if unreached == &[BusId(2), BusId(3)])));
        assert!(v.iter().any(|x| matches!(x, Violation::BranchCount { .. })));
    }

    #[test]
    fn multiple_slack() {
        let net = network(vec![bus(0, true), bus(1, true)], vec![branch(0, 1)]);
        let v = validate_radial(&net).unwrap_err();
        assert_eq!(v, vec![Violation::MultipleSlack(vec![BusId(0), BusId(1)])]);
        assert_eq!(net.slack_bus(), None);
    }

    #[test]
    fn duplicate_ids_and_bad_branches_are_all_reported() {
        let mut bad = branch(1, 1);
        bad.r = 0.0;
        bad.x = 0.0;
        let net = network(
            vec![bus(0, true), bus(1, false), bus(1, false)],
            vec![bad, branch(0, 7)],
        );
        let v = validate_radial(&net).unwrap_err();
        assert!(v.contains(&Violation::DuplicateBusId(BusId(1))));
        assert!(v.contains(&Violation::SelfLoop {
            branch: 0,
            bus: BusId(1)
        }));
        assert!(v.contains(&Violation::InvalidImpedance {
            branch: 0,
            r: 0.0,
            x: 0.0
        }));
        assert!(v.contains(&Violation::UnknownBus {
            branch: 1,
            bus: BusId(7)
        }));
    }

    #[test]
    fn no_slack() {
        let net = network(vec![bus(0, false), bus(1, false)], vec![branch(0, 1)]);
        assert_eq!(validate_radial(&net).unwrap_err(), vec![Violation::NoSlack]);
    }

    #[test]
    fn profile_checks() {
        let net = network(vec![bus(0, true), bus(1, false)], vec![branch(0, 1)]);
        let good = LoadProfile {
            bus_id: BusId(1),
            p: vec![0.1; 3],
            q: vec![0.0; 3],
        };
        assert_eq!(check_profiles(&net, std::slice::from_ref(&good)), Ok(3));
        let unknown = LoadProfile {
            bus_id: BusId(9),
            ..good.clone()
        };
        assert_eq!(
            check_profiles(&net, &[unknown]),
            Err(ProfileError::UnknownBus(BusId(9)))
        );
        let short = LoadProfile {
            bus_id: BusId(0),
            p: vec![0.1; 2],
            q: vec![0.0; 2],
        };
        assert!(matches!(
            check_profiles(&net, &[good.clone(), short]),
            Err(ProfileError::HorizonMismatch { .. })
        ));
        assert_eq!(
            check_profiles(&net, &[good.clone(), good]),
            Err(ProfileError::Duplicate(BusId(1)))
        );
        assert_eq!(check_profiles(&net, &[]), Err(ProfileError::Empty));
    }
}

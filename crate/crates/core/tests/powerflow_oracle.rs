mod common;

use common::{all_labeled_trees, network_from_edges, rng, zbus_oracle};
use doe_core::netmodel::{check_profiles, BusId};
use doe_core::powerflow::{batch_solve, solve, RadialSolver, DEFAULT_TOLERANCE};
use doe_core::scenario::{generate, NoiseConfig, ScenarioSet};
use doe_core::synthetic::{feeder76, feeder76_profiles, HORIZON};
use num_complex::Complex64;
use rand::Rng;

fn nominal_loads(t: usize) -> Vec<Complex64> {
    let net = feeder76();
    let mut loads = vec![Complex64::new(0.0, 0.0); net.len()];
    for p in feeder76_profiles() {
        loads[net.index_of(p.bus_id).unwrap()] = Complex64::new(p.p[t], p.q[t]);
    }
    loads
}

#[test]
fn every_small_tree_matches_zbus_oracle() {
    let mut r = rng(0x5eed);
    let mut checked = 0;
    for n in 2..=5 {
        for edges in all_labeled_trees(n) {
            let z: Vec<(f64, f64)> = edges
                .iter()
                .map(|_| (r.random_range(0.005..0.05), r.random_range(0.0..0.05)))
                .collect();
            let net = network_from_edges(n, &edges, &z);
            let solver = RadialSolver::new(&net).unwrap();
            for _ in 0..20 {
                let mut loads: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(r.random_range(-0.6..0.8), r.random_range(-0.3..0.3)))
                    .collect();
                loads[0] = Complex64::new(0.0, 0.0);
                let sol = solver.solve(&loads).unwrap();
                assert!(sol.converged, "tree {edges:?} loads {loads:?}");
                let oracle = zbus_oracle(&net, &loads).expect("oracle diverged");
                for (a, b) in sol.v.iter().zip(&oracle) {
                    assert!((a.norm() - b.norm()).abs() <= 1e-8, "{a} vs {b} on {edges:?}");
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 20 * (1 + 3 + 16 + 125));
}

#[test]
fn feeder_residuals_vanish() {
    let net = feeder76();
    let solver = RadialSolver::new(&net).unwrap();
    for t in 0..HORIZON {
        let loads = nominal_loads(t);
        let sol = solver.solve(&loads).unwrap();
        assert!(sol.converged);
        let worst = solver.residuals(&sol.v, &loads).into_iter().fold(0.0, f64::max);
        assert!(worst <= 10.0 * DEFAULT_TOLERANCE, "t={t}: residual {worst}");
    }
}

#[test]
fn feeder_matches_zbus_oracle() {
    let net = feeder76();
    for t in [3, 12, 19] {
        let loads = nominal_loads(t);
        let sol = solve(&net, &loads).unwrap();
        let oracle = zbus_oracle(&net, &loads).unwrap();
        for (a, b) in sol.v.iter().zip(&oracle) {
            assert!((a.norm() - b.norm()).abs() <= 1e-8);
        }
    }
}

#[test]
fn feeder_voltages_cross_the_yellow_bands() {
    let net = feeder76();
    let solver = RadialSolver::new(&net).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in 0..HORIZON {
        for m in solver.solve(&nominal_loads(t)).unwrap().magnitudes() {
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    assert!(lo > 0.9 && lo < 0.96, "min {lo}");
    assert!(hi < 1.1 && hi > 1.04, "max {hi}");
}

#[test]
fn batch_is_independent_of_worker_count() {
    let net = feeder76();
    let set = generate(&feeder76_profiles(), NoiseConfig::default(), 12, 42).unwrap();
    let one = batch_solve(&net, &set, Some(1)).unwrap();
    for workers in [Some(2), Some(5), None] {
        let other = batch_solve(&net, &set, workers).unwrap();
        assert_eq!(one.voltages, other.voltages);
        assert_eq!(one.failures, other.failures);
    }
    assert!(one.failures.is_empty());
}

#[test]
fn batch_of_one_equals_single_solve() {
    let net = feeder76();
    let profiles = feeder76_profiles();
    let data: Vec<Complex64> = profiles
        .iter()
        .flat_map(|p| (0..HORIZON).map(move |t| Complex64::new(p.p[t], p.q[t])))
        .collect();
    let ids: Vec<BusId> = profiles.iter().map(|p| p.bus_id).collect();
    let set = ScenarioSet::from_parts(1, 0, ids, HORIZON, data).unwrap();
    let out = batch_solve(&net, &set, None).unwrap();
    for t in 0..HORIZON {
        let mags = solve(&net, &nominal_loads(t)).unwrap().magnitudes();
        for (i, m) in mags.iter().enumerate() {
            assert_eq!(out.voltages.get(0, i, t), *m);
        }
    }
}

#[test]
fn batch_shape_at_full_scale() {
    let net = feeder76();
    let profiles = feeder76_profiles();
    assert_eq!(check_profiles(&net, &profiles), Ok(HORIZON));
    let set = generate(&profiles, NoiseConfig::default(), 1000, 7).unwrap();
    let out = batch_solve(&net, &set, None).unwrap();
    assert_eq!(out.voltages.n(), 1000);
    assert_eq!(out.voltages.bus_ids().len(), 76);
    assert_eq!(out.voltages.horizon(), 24);
    assert!(out.failures.is_empty());
}

#[test]
fn unknown_scenario_bus_rejected() {
    let net = feeder76();
    let set = ScenarioSet::from_parts(1, 0, vec![BusId(999)], 1, vec![Complex64::new(0.1, 0.0)]).unwrap();
    assert!(batch_solve(&net, &set, Some(1)).is_err());
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails, including by exceeding its time budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{all_labeled_trees, network_from_edges, rng, spread_voltages, zbus_oracle};
use doe_core::envelope::{Envelope, EnvelopePolicy, Mode, Policies, PolicyPair};
use doe_core::pqchart::{build_region, PqConstraints};
use doe_core::powerflow::{batch_solve, RadialSolver};
use doe_core::robust::{benchmark, envelope_error, m1_doe, m2_doe, CcConfig};
use doe_core::scenario::{generate, NoiseConfig};
use doe_core::synthetic::{feeder76, feeder76_profiles};
use doe_core::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn standard_pair() -> Policies {
    Policies::uniform(PolicyPair {
        p: EnvelopePolicy::standard(Mode::Anrc),
        q: EnvelopePolicy::standard(Mode::Prc),
    })
}

fn green_zone_identity() -> Outcome {
    let mut checked = 0;
    for mode in [Mode::Anrc, Mode::Prc, Mode::BandedPrc] {
        let policy = EnvelopePolicy::standard(mode);
        for k in 0..1000 {
            let u = 0.96 + 0.08 * k as f64 / 999.0;
            let got = policy.bounds(u).map_err(|e| e.to_string())?;
            ensure(got == Envelope::new(-1.0, 1.0), || format!("{mode} at u={u}: {got:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} grid points exact"))
}

/// 50 scenario sets of varying size, including sizes where `alpha * n / 2`
/// is an integer.
fn m1_m2_agreement(pick_q: bool) -> Outcome {
    let policies = standard_pair();
    let cc = CcConfig::default();
    let mut r = rng(if pick_q { 303 } else { 202 });
    let mut cut_cells = 0;
    for k in 0..50 {
        let n = [40, 100, 200, 333, 1000][k % 5];
        let v = spread_voltages(&mut r, n, 8, 24);
        let a = m1_doe(&policies, &v, &cc).map_err(|e| e.to_string())?;
        let b = m2_doe(&policies, &v, &cc).map_err(|e| e.to_string())?;
        let e = envelope_error(&a, &b).map_err(|e| e.to_string())?;
        let (delta, excluded_match) = if pick_q {
            (e.delta_q, a.cells().iter().zip(b.cells()).all(|(x, y)| x.q.is_empty() == y.q.is_empty()))
        } else {
            (e.delta_p, a.cells().iter().zip(b.cells()).all(|(x, y)| x.p.is_empty() == y.p.is_empty()))
        };
        ensure(delta == 0.0, || format!("set {k} (n={n}): delta = {delta}"))?;
        ensure(excluded_match, || format!("set {k}: empty cells differ"))?;
        cut_cells += a
            .cells()
            .iter()
            .filter(|c| if pick_q { c.q.width() < 2.0 } else { c.p.width() < 2.0 })
            .count();
    }
    Ok(format!("50 sets, delta = 0 exactly, {cut_cells} non-trivial cells"))
}

fn benchmark_ordering() -> Outcome {
    let net = feeder76();
    let set = generate(&feeder76_profiles(), NoiseConfig::default(), 1000, 2024).map_err(|e| e.to_string())?;
    let out = batch_solve(&net, &set, Some(1)).map_err(|e| e.to_string())?;
    ensure(out.failures.is_empty(), || "power flow failures".into())?;
    let v = out.voltages;
    ensure(v.n() == 1000 && v.bus_ids().len() == 76 && v.horizon() == 24, || "wrong shape".into())?;
    let report = benchmark(&standard_pair(), &v, &CcConfig::default(), 5, false).map_err(|e| e.to_string())?;
    ensure(report.m1_always_faster(), || {
        format!("m1 not faster in every repetition: {:?} vs {:?}", report.m1_samples_ms, report.m2_samples_ms)
    })?;
    let mut detail = format!(
        "m1 {:.1} ms, m2 {:.1} ms over {} reps, ratio {:.2}",
        report.m1_ms, report.m2_ms, report.repetitions, report.ratio
    );
    if report.ratio < 2.0 {
        detail.push_str(" [WARN ratio below 2]");
    }
    Ok(detail)
}

fn power_flow_correctness() -> Outcome {
    let mut r = rng(55);
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for n in 2..=5 {
        for edges in all_labeled_trees(n) {
            let z: Vec<(f64, f64)> = edges
                .iter()
                .map(|_| (r.random_range(0.005..0.05), r.random_range(0.0..0.05)))
                .collect();
            let net = network_from_edges(n, &edges, &z);
            let solver = RadialSolver::new(&net).map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let mut loads: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(r.random_range(-0.6..0.8), r.random_range(-0.3..0.3)))
                    .collect();
                loads[0] = Complex64::new(0.0, 0.0);
                let sol = solver.solve(&loads).map_err(|e| e.to_string())?;
                ensure(sol.converged, || format!("no convergence on {edges:?}"))?;
                let oracle = zbus_oracle(&net, &loads).ok_or("oracle diverged")?;
                for (a, b) in sol.v.iter().zip(&oracle) {
                    worst = worst.max((a.norm() - b.norm()).abs());
                }
                solves += 1;
            }
        }
    }
    ensure(worst <= 1e-8, || format!("small-tree deviation {worst:e}"))?;

    let net = feeder76();
    let solver = RadialSolver::new(&net).map_err(|e| e.to_string())?;
    let profiles = feeder76_profiles();
    let set = generate(&profiles, NoiseConfig::default(), 20, 9).map_err(|e| e.to_string())?;
    let mut residual: f64 = 0.0;
    for s in 0..set.n() {
        for t in 0..set.horizon() {
            let mut loads = vec![Complex64::new(0.0, 0.0); net.len()];
            for (k, &id) in set.bus_ids().iter().enumerate() {
                loads[net.index_of(id).unwrap()] = set.get(s, k, t);
            }
            let sol = solver.solve(&loads).map_err(|e| e.to_string())?;
            ensure(sol.converged, || format!("feeder cell ({s}, {t}) did not converge"))?;
            residual = residual.max(solver.residuals(&sol.v, &loads).into_iter().fold(0.0, f64::max));
        }
    }
    ensure(residual <= 1e-7, || format!("feeder residual {residual:e}"))?;
    Ok(format!("{solves} small-tree solves, max |dv| {worst:.1e}; feeder max residual {residual:.1e}"))
}

fn chance_constraint_nesting() -> Outcome {
    let alphas = [0.01, 0.05, 0.2];
    let policies = standard_pair();
    let mut r = rng(66);
    for k in 0..20 {
        let v = spread_voltages(&mut r, 250, 8, 24);
        let does: Vec<_> = alphas
            .iter()
            .map(|&a| m1_doe(&policies, &v, &CcConfig::new(a).unwrap()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for w in does.windows(2) {
            for (tight, loose) in w[0].cells().iter().zip(w[1].cells()) {
                ensure(tight.p.is_subset_of(&loose.p) && tight.q.is_subset_of(&loose.q), || {
                    format!("set {k}: {tight:?} not inside {loose:?}")
                })?;
            }
        }
    }
    Ok("20 sets, 3 levels, nested at every cell".into())
}

fn pq_null_set() -> Outcome {
    let p = Envelope::new(-1.0, 0.0);
    let q = Envelope::new(-0.6, -0.6);
    let strict = build_region(&p, &q, &PqConstraints::new(Some(0.9), None).unwrap()).map_err(|e| e.to_string())?;
    ensure(strict.empty && strict.area() == 0.0, || format!("pf 0.9: empty={} area={}", strict.empty, strict.area()))?;
    let relaxed = build_region(&p, &q, &PqConstraints::new(Some(0.5), None).unwrap()).map_err(|e| e.to_string())?;
    ensure(!relaxed.empty, || "pf 0.5 region is empty".into())?;
    ensure(relaxed.contains(-1.0, -0.6), || "(-1, -0.6) should be feasible at pf 0.5".into())?;
    Ok("pf 0.9 empty with zero area; pf 0.5 non-empty".into())
}

fn disc_area() -> Outcome {
    let region = build_region(
        &Envelope::new(-1.0, 1.0),
        &Envelope::new(-1.0, 1.0),
        &PqConstraints::new(None, Some(1.0)).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let rel = (region.area() - std::f64::consts::PI).abs() / std::f64::consts::PI;
    ensure(rel < 0.005, || format!("relative error {rel}"))?;
    Ok(format!("area {:.6}, relative error {:.3}%", region.area(), 100.0 * rel))
}

fn doe_bin(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_doe"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DOE_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("doe {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })
}

fn decentralization() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(99);
    let buses = [3u32, 8, 17, 40];
    let write = |path: &str, r: &mut rand_chacha::ChaCha8Rng, target_values: &[f64]| -> Result<(), String> {
        let mut text = String::from("bus_id,t,v_mag_pu\n");
        for &b in &buses {
            for t in 0..24 {
                let v = if b == 8 { target_values[t] } else { r.random_range(0.85..1.15) };
                text.push_str(&format!("{b},{t},{v}\n"));
            }
        }
        fs::write(dir.path().join(path), text).map_err(|e| e.to_string())
    };
    let target: Vec<f64> = (0..24).map(|_| r.random_range(0.88..1.12)).collect();
    write("a.csv", &mut r, &target)?;
    write("b.csv", &mut r, &target)?;
    let entries = fs::read_dir(dir.path()).map_err(|e| e.to_string())?.count();
    ensure(entries == 2, || "working directory should hold only the voltage files".into())?;
    doe_bin(&["rt-doe", "--voltages", "a.csv", "--out", "ra"], dir.path())?;
    doe_bin(&["rt-doe", "--voltages", "b.csv", "--out", "rb"], dir.path())?;
    let rows = |run: &str| -> Result<Vec<String>, String> {
        let text = fs::read_to_string(dir.path().join(run).join("doe.csv")).map_err(|e| e.to_string())?;
        Ok(text.lines().filter(|l| l.starts_with("8,")).map(str::to_string).collect())
    };
    let (a, b) = (rows("ra")?, rows("rb")?);
    ensure(a.len() == 24 && a == b, || "bus 8 rows differ between runs".into())?;
    let all_a = fs::read(dir.path().join("ra/doe.csv")).unwrap();
    let all_b = fs::read(dir.path().join("rb/doe.csv")).unwrap();
    ensure(all_a != all_b, || "perturbation had no effect on other buses".into())?;
    Ok("no network input; bus 8 rows byte-identical under perturbation".into())
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    doe_bin(&["synth-feeder", "--out", "feeder"], dir.path())?;
    for run in ["one", "two"] {
        doe_bin(
            &[
                "da-doe", "--network", "feeder/network.json", "--profiles", "feeder/profiles.csv",
                "--scenarios", "1000", "--seed", "1234", "--alpha", "0.05", "--out", run,
            ],
            dir.path(),
        )?;
    }
    for file in ["doe.csv", "u_bands.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("one").join(file)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.path().join("two").join(file)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{file} differs"))?;
    }
    Ok("doe.csv, u_bands.csv and manifest.json byte-identical".into())
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "green-zone identity", budget: Duration::from_secs(1), run: green_zone_identity },
        Criterion { id: 2, name: "M1/M2 agreement, ANRC active power", budget: Duration::from_secs(10), run: || m1_m2_agreement(false) },
        Criterion { id: 3, name: "M1/M2 agreement, PRC reactive power", budget: Duration::from_secs(10), run: || m1_m2_agreement(true) },
        Criterion { id: 4, name: "benchmark ordering", budget: Duration::from_secs(120), run: benchmark_ordering },
        Criterion { id: 5, name: "power-flow correctness", budget: Duration::from_secs(30), run: power_flow_correctness },
        Criterion { id: 6, name: "chance-constraint nesting", budget: Duration::from_secs(10), run: chance_constraint_nesting },
        Criterion { id: 7, name: "P-Q null set", budget: Duration::from_secs(1), run: pq_null_set },
        Criterion { id: 8, name: "disc-area fidelity", budget: Duration::from_secs(1), run: disc_area },
        Criterion { id: 9, name: "decentralization contract", budget: Duration::from_secs(5), run: decentralization },
        Criterion { id: 10, name: "end-to-end determinism", budget: Duration::from_secs(120), run: end_to_end_determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; took {elapsed:.2?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:>2}  {:<38} {:>9.3?}  {detail}", c.id, c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {:<38} {:>9.3?}  {why}", c.id, c.name, elapsed);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

mod common;

use std::f64::consts::PI;

use common::rng;
use doe_core::envelope::Envelope;
use doe_core::pqchart::{build_region, disc_half_planes, PqConstraints, DEFAULT_DISC_VERTICES};
use proptest::prelude::*;
use rand::Rng;

/// Signed slack of every active constraint at (p, q); feasible iff all are ≥ 0.
fn slacks(p: f64, q: f64, env: (f64, f64, f64, f64), c: &PqConstraints) -> Vec<f64> {
    let (p_lo, p_hi, q_lo, q_hi) = env;
    let mut out = vec![p - p_lo, p_hi - p, q - q_lo, q_hi - q];
    if let Some(pf) = c.pf_limit {
        let tan = (1.0 - pf * pf).sqrt() / pf;
        // Distance-normalized slack of |q| ≤ |p| tan.
        out.push((p.abs() * tan - q.abs()) / (1.0 + tan * tan).sqrt());
    }
    if let Some(s) = c.s_max {
        for h in disc_half_planes(s, c.disc_vertices) {
            out.push(h.c - h.a * p - h.b * q);
        }
    }
    out
}

#[test]
fn contains_agrees_with_direct_predicate() {
    let mut r = rng(11);
    let cases = [
        ((-1.0, 1.0, -1.0, 1.0), PqConstraints::new(Some(0.9), Some(1.0)).unwrap()),
        ((-0.8, 0.3, -0.6, 0.7), PqConstraints::new(Some(0.7), Some(0.75)).unwrap()),
        ((-1.0, 0.0, -0.6, -0.6), PqConstraints::new(Some(0.5), None).unwrap()),
        ((0.1, 0.9, -0.2, 0.4), PqConstraints::new(None, Some(0.6)).unwrap()),
    ];
    let mut disagreements = 0;
    let mut checked = 0;
    for (env, c) in cases {
        let region = build_region(&Envelope::new(env.0, env.1), &Envelope::new(env.2, env.3), &c).unwrap();
        for k in 0..25_000 {
            let p = r.random_range(-1.2..1.2);
            // Every fourth point is snapped onto the degenerate q line, if any.
            let q = if env.2 == env.3 && k % 4 == 0 { env.2 } else { r.random_range(-1.2..1.2) };
            let s = slacks(p, q, env, &c);
            let worst = s.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst.abs() < 1e-7 && !(env.2 == env.3 && q == env.2) {
                continue;
            }
            let expected = if env.2 == env.3 && q == env.2 {
                s.iter().enumerate().all(|(j, &x)| j == 2 || j == 3 || x >= -1e-9)
            } else {
                worst >= 0.0
            };
            checked += 1;
            if region.contains(p, q) != expected {
                disagreements += 1;
            }
        }
    }
    assert!(checked > 90_000);
    assert_eq!(disagreements, 0);
}

#[test]
fn inscribed_polygon_area() {
    let region = build_region(
        &Envelope::new(-2.0, 2.0),
        &Envelope::new(-2.0, 2.0),
        &PqConstraints::new(None, Some(1.0)).unwrap(),
    )
    .unwrap();
    let n = DEFAULT_DISC_VERTICES as f64;
    let exact = 0.5 * n * (2.0 * PI / n).sin();
    assert!((region.area() - exact).abs() < 1e-12);
    assert!((region.area() - PI).abs() / PI < 0.005);
}

prop_compose! {
    fn rect()(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) -> (Envelope, Envelope) {
        (Envelope::new(a.min(b), a.max(b)), Envelope::new(c.min(d), c.max(d)))
    }
}

proptest! {
    #[test]
    fn constraints_never_add_area((p, q) in rect(), pf in 0.05f64..1.0, s in 0.05f64..2.0) {
        let none = build_region(&p, &q, &PqConstraints::default()).unwrap().area();
        let with_pf = build_region(&p, &q, &PqConstraints::new(Some(pf), None).unwrap()).unwrap().area();
        let with_disc = build_region(&p, &q, &PqConstraints::new(None, Some(s)).unwrap()).unwrap().area();
        let both = build_region(&p, &q, &PqConstraints::new(Some(pf), Some(s)).unwrap()).unwrap().area();
        prop_assert!((none - p.width() * q.width()).abs() < 1e-12);
        prop_assert!(with_pf <= none + 1e-12);
        prop_assert!(with_disc <= none + 1e-12);
        prop_assert!(both <= with_pf.min(with_disc) + 1e-12);
    }

    #[test]
    fn relaxed_limits_recover_rectangle((p, q) in rect()) {
        let rect_area = p.width() * q.width();
        let loose = PqConstraints::new(Some(1e-9), Some(1e6)).unwrap();
        let area = build_region(&p, &q, &loose).unwrap().area();
        prop_assert!((area - rect_area).abs() < 1e-6);
    }

    #[test]
    fn symmetric_envelopes_give_symmetric_regions(a in 0.0f64..1.0, b in 0.0f64..1.0, pf in 0.1f64..1.0, s in 0.1f64..1.5, pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 50)) {
        let c = PqConstraints::new(Some(pf), Some(s)).unwrap();
        let region = build_region(&Envelope::new(-a, a), &Envelope::new(-b, b), &c).unwrap();
        for (p, q) in pts {
            prop_assert_eq!(region.contains(p, q), region.contains(-p, -q));
        }
        let area = |quad| region.piece(quad).map_or(0.0, |piece| piece.area());
        use doe_core::pqchart::Quadrant::*;
        prop_assert!((area(I) - area(III)).abs() < 1e-12);
        prop_assert!((area(II) - area(IV)).abs() < 1e-12);
    }
}

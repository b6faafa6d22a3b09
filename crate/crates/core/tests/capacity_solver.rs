use thermolux_core::{
    find_two_point_threshold, solve_capacity, two_point_capacity, verify_two_point_kkt,
    SignalLevel, SolverConfig, KKT_TOLERANCE,
};

fn level(x: f64) -> SignalLevel {
    SignalLevel::new(x).unwrap()
}

/// Plain Blahut–Arimoto on an evenly spaced grid with a fixed output cut.
/// Returns (lower, upper) after `iters` sweeps.
fn reference_ba(x_m: f64, points: usize, outputs: usize, iters: usize) -> (f64, f64) {
    let levels: Vec<f64> = (0..points)
        .map(|i| x_m * i as f64 / (points - 1) as f64)
        .collect();
    let rows: Vec<Vec<f64>> = levels
        .iter()
        .map(|&x| {
            let mut r: Vec<f64> = (0..outputs).map(|n| (1.0 - x) * x.powi(n as i32)).collect();
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|p| *p /= s);
            r
        })
        .collect();
    let mut w = vec![1.0 / points as f64; points];
    let mut bounds = (0.0, f64::INFINITY);
    for _ in 0..iters {
        let mut q = vec![0.0; outputs];
        for (wi, r) in w.iter().zip(&rows) {
            for (qn, p) in q.iter_mut().zip(r) {
                *qn += wi * p;
            }
        }
        let d: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&q)
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, qn)| p * (p / qn).ln())
                    .sum()
            })
            .collect();
        let lower: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        bounds = (lower, upper);
        let z: f64 = w.iter().zip(&d).map(|(a, b)| a * b.exp()).sum();
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi *= di.exp() / z;
        }
    }
    bounds
}

#[test]
fn reference_iteration_brackets_closed_form() {
    // 0.5: ln 1.25 by hand
    let closed = two_point_capacity(level(0.5));
    assert!((closed - 0.223_143_551_314_209_76).abs() < 1e-15);
    let (lo, hi) = reference_ba(0.5, 101, 80, 3000);
    assert!(
        lo <= closed + 1e-12 && closed <= hi + 1e-12,
        "{lo} {closed} {hi}"
    );
    assert!(hi - lo < 1e-5);

    assert!((two_point_capacity(level(0.9)) - 0.528_766_115_076_167_3).abs() < 1e-15);
}

#[test]
fn solver_matches_reference_iteration() {
    for x in [0.3, 0.6, 0.8] {
        let r = solve_capacity(level(x), &SolverConfig::default()).unwrap();
        let (lo, hi) = reference_ba(x, 101, 400, 4000);
        assert!(r.capacity_nats >= lo - 1e-12, "x={x}");
        assert!(r.capacity_nats <= hi + 1e-12, "x={x}");
    }
}

#[test]
fn bracket_holds_throughout() {
    let r = solve_capacity(level(0.7), &SolverConfig::default()).unwrap();
    let closed = two_point_capacity(level(0.7));
    assert!(r.converged);
    let mut prev = f64::NEG_INFINITY;
    for b in &r.history {
        assert!(b.lower <= closed + 1e-12);
        assert!(b.upper >= closed - 1e-12);
        assert!(b.lower >= prev - 1e-14, "lower bound decreased");
        prev = b.lower;
    }
    assert!(r.upper_bound_nats - r.capacity_nats <= SolverConfig::default().tol);
}

#[test]
fn grid_refinement_is_stable() {
    let coarse = solve_capacity(level(0.9), &SolverConfig::default()).unwrap();
    let fine = solve_capacity(
        level(0.9),
        &SolverConfig {
            grid_points: 4001,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    assert!((coarse.capacity_nats - fine.capacity_nats).abs() < 1e-7);
}

#[test]
fn two_atoms_below_threshold() {
    for x in [0.2, 0.5, 0.85] {
        let r = solve_capacity(level(x), &SolverConfig::default()).unwrap();
        let atoms = r.distribution.atoms();
        assert_eq!(atoms.len(), 2, "x={x}: {atoms:?}");
        assert_eq!(atoms[0].level.value(), 0.0);
        assert_eq!(atoms[1].level.value(), x);
        assert!((r.capacity_nats - two_point_capacity(level(x))).abs() < 1e-10);
    }
}

#[test]
fn interior_atom_appears_above_threshold() {
    for x in [0.9, 0.95] {
        let r = solve_capacity(level(x), &SolverConfig::default()).unwrap();
        let interior: Vec<_> = r
            .distribution
            .atoms()
            .iter()
            .filter(|a| a.level.value() > 0.0 && a.level.value() < x)
            .collect();
        assert!(!interior.is_empty(), "x={x}");
        assert!(interior
            .iter()
            .all(|a| (0.55..0.75).contains(&a.level.value())));
        assert!(r.capacity_nats > two_point_capacity(level(x)) + 1e-5);
        assert!(r.kkt_max_violation <= KKT_TOLERANCE);
    }
}

#[test]
fn kkt_check_separates_regimes() {
    assert!(verify_two_point_kkt(level(0.5), 2001).unwrap().is_optimal);
    assert!(verify_two_point_kkt(level(0.89), 2001).unwrap().is_optimal);
    let r = verify_two_point_kkt(level(0.95), 2001).unwrap();
    assert!(!r.is_optimal);
    assert!(r.max_excess_nats > KKT_TOLERANCE);
    assert!(r.argmax_level > 0.0 && r.argmax_level < 0.95);
}

#[test]
fn threshold_nests_under_refinement() {
    let coarse = find_two_point_threshold(0.85, 0.95, 1e-2).unwrap();
    let fine = find_two_point_threshold(0.85, 0.95, 1e-3).unwrap();
    assert!(coarse.lo <= fine.lo && fine.hi <= coarse.hi);
    assert!(fine.hi - fine.lo <= 1e-3);
    assert!((0.88..=0.92).contains(&fine.level.value()));
    assert!(
        verify_two_point_kkt(level(fine.lo - 2e-3), 2001)
            .unwrap()
            .is_optimal
    );
    let x = fine.level.value();
    assert!((fine.mean_occupation() - x / (1.0 - x)).abs() < 1e-12);
}

#[test]
fn threshold_rejects_bad_bracket() {
    assert!(find_two_point_threshold(0.95, 0.85, 1e-3).is_err());
    assert!(find_two_point_threshold(0.5, 0.6, 1e-3).is_err());
}

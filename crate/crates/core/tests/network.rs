mod support;

use gridgraph_core::cases;
use gridgraph_core::network::{
    build_decoupled, build_ybus, compute_mismatch, parse_case, write_case, Branch, Bus, BusKind, Coefficients,
    NetworkCase, NetworkError, VoltageState,
};
use gridgraph_core::pipeline::newton_raphson_reference;
use gridgraph_core::Complex64;
use proptest::prelude::*;

const TWO_BUS: &str = "\
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;
\t2\t1\t10\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t999\t-999\t1\t100\t1\t999\t0;
];
mpc.branch = [
\t1\t2\t0\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;
];
";

fn two_bus(charging: f64, pd: f64) -> NetworkCase {
    let mut load = Bus::new(2, BusKind::Pq);
    load.pd = pd;
    NetworkCase {
        name: "two".into(),
        base_mva: 100.0,
        buses: vec![Bus::new(1, BusKind::Slack), load],
        branches: vec![Branch::line(0, 1, 0.0, 0.1, charging)],
    }
}

fn corpus() -> Vec<NetworkCase> {
    let mut out: Vec<NetworkCase> = cases::NAMES.iter().map(|n| cases::load(n).unwrap().unwrap()).collect();
    for seed in 0..20 {
        let n = 3 + (seed as usize * 7) % 28;
        out.push(support::random_case(seed, n, seed % 2 == 0));
    }
    out
}

#[test]
fn parse_minimal_two_bus() {
    let case = parse_case(TWO_BUS).unwrap();
    assert_eq!(case.bus_count(), 2);
    assert_eq!(case.branches.len(), 1);
    assert_eq!(case.base_mva, 100.0);
    assert!((case.buses[1].pd - 0.1).abs() < 1e-15);
}

#[test]
fn parse_ieee14_counts() {
    let case = cases::ieee14();
    assert_eq!(case.bus_count(), 14);
    assert_eq!(case.branches.len(), 20);
    assert_eq!(case.slack_buses().len(), 1);
}

#[test]
fn unknown_bus_is_named() {
    let text = TWO_BUS.replace("\t1\t2\t0\t0.1", "\t1\t99\t0\t0.1");
    let err = parse_case(&text).unwrap_err();
    assert!(matches!(err, NetworkError::UnknownBus { bus: 99, .. }), "{err:?}");
    assert!(err.to_string().contains("99"));
}

#[test]
fn round_trip_is_identical() {
    // random cases are first brought onto values a case file can express
    for case in corpus() {
        let parsed = parse_case(&write_case(&case)).unwrap();
        let again = parse_case(&write_case(&parsed)).unwrap();
        assert_eq!(again, parsed, "{}", case.name);
    }
}

#[test]
fn ybus_two_bus_values() {
    let y = build_ybus(&two_bus(0.0, 0.0)).unwrap().to_dense();
    assert!((y[0][0] - Complex64::new(0.0, -10.0)).norm() < 1e-12);
    assert!((y[1][1] - Complex64::new(0.0, -10.0)).norm() < 1e-12);
    assert!((y[0][1] - Complex64::new(0.0, 10.0)).norm() < 1e-12);
    let y = build_ybus(&two_bus(0.2, 0.0)).unwrap().to_dense();
    assert!((y[0][0] - Complex64::new(0.0, -9.9)).norm() < 1e-12);
    assert!((y[1][1] - Complex64::new(0.0, -9.9)).norm() < 1e-12);
}

#[test]
fn decoupled_two_bus_values() {
    let dg = build_decoupled(&two_bus(0.0, 0.0)).unwrap();
    let bp = dg.to_dense(Coefficients::BPrime);
    assert_eq!(dg.index_set(Coefficients::BPrime), vec![false, true]);
    assert!((bp[1][1] - 10.0).abs() < 1e-12);
    let dg = build_decoupled(&two_bus(0.2, 0.0)).unwrap();
    let bpp = dg.to_dense(Coefficients::BDoublePrime);
    assert_eq!(dg.index_set(Coefficients::BDoublePrime), vec![false, true]);
    assert!((bpp[1][1] - 9.9).abs() < 1e-12);
}

#[test]
fn assembly_matches_dense_oracle_on_corpus() {
    for case in corpus() {
        let y = build_ybus(&case).unwrap().to_dense();
        assert!(support::max_abs_diff_c(&y, &support::reference_ybus(&case)) <= 1e-12, "{}", case.name);
        let dg = build_decoupled(&case).unwrap();
        let (bp, bpp) = support::reference_decoupled(&case);
        assert!(support::max_abs_diff(&dg.to_dense(Coefficients::BPrime), &bp) <= 1e-12, "{}", case.name);
        assert!(support::max_abs_diff(&dg.to_dense(Coefficients::BDoublePrime), &bpp) <= 1e-12, "{}", case.name);
    }
}

#[test]
fn row_sums_vanish_without_shunts_taps_or_charging() {
    for seed in 0..20 {
        let case = support::random_case(seed, 4 + seed as usize, false);
        let y = build_ybus(&case).unwrap().to_dense();
        for row in &y {
            let s: Complex64 = row.iter().sum();
            assert!(s.norm() < 1e-12, "seed {seed}: {s}");
        }
    }
}

#[test]
fn unshifted_off_diagonals_are_symmetric() {
    for seed in 0..10 {
        let mut case = support::random_case(seed, 12, true);
        for br in &mut case.branches {
            br.shift = 0.0;
        }
        let ybus = build_ybus(&case).unwrap();
        let (ft, tf) = ybus.edge_admittances();
        for (a, b) in ft.iter().zip(tf) {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn mismatch_zero_at_balanced_flat_start() {
    let case = two_bus(0.0, 0.0);
    let ybus = build_ybus(&case).unwrap();
    let m = compute_mismatch(&ybus, &VoltageState::flat_start(&case).v).unwrap();
    assert_eq!(m.mbpim, 0.0);
}

#[test]
fn mismatch_two_bus_load() {
    let case = two_bus(0.0, 0.1);
    let ybus = build_ybus(&case).unwrap();
    let m = compute_mismatch(&ybus, &VoltageState::flat_start(&case).v).unwrap();
    assert!((m.dp[1] + 0.1).abs() < 1e-15);
    assert!((m.mbpim - 0.1).abs() < 1e-15);
}

#[test]
fn mismatch_small_at_newton_solution() {
    let case = cases::ieee14();
    let nr = newton_raphson_reference(&case, 1e-8, 30).unwrap();
    let m = compute_mismatch(&build_ybus(&case).unwrap(), &nr.state.v).unwrap();
    assert!(m.mbpim < 1e-6);
}

fn dense_mismatch_check(case: &NetworkCase, v: &[Complex64]) {
    let y = support::reference_ybus(case);
    let m = compute_mismatch(&build_ybus(case).unwrap(), v).unwrap();
    let mut worst = 0.0f64;
    for (i, bus) in case.buses.iter().enumerate() {
        let iy: Complex64 = (0..v.len()).map(|j| y[i][j] * v[j]).sum();
        let s = v[i] * iy.conj();
        let spec = Complex64::new(bus.pg - bus.pd, bus.qg - bus.qd);
        if bus.kind != BusKind::Slack {
            let dp = spec.re - s.re;
            assert!((m.dp[i] - dp).abs() < 1e-12, "{} bus {i}", case.name);
            worst = worst.max(dp.abs());
        }
        if bus.kind == BusKind::Pq {
            let dq = spec.im - s.im;
            assert!((m.dq[i] - dq).abs() < 1e-12, "{} bus {i}", case.name);
            worst = worst.max(dq.abs());
        }
    }
    assert!((m.mbpim - worst).abs() < 1e-12);
}

#[test]
fn mismatch_matches_dense_evaluation_on_corpus() {
    for (k, case) in corpus().iter().enumerate() {
        let mut rng = support::rng(k as u64);
        use rand::Rng;
        let v: Vec<Complex64> = (0..case.bus_count())
            .map(|_| Complex64::from_polar(rng.random_range(0.9..1.1), rng.random_range(-0.5..0.5)))
            .collect();
        dense_mismatch_check(case, &v);
    }
}

#[test]
fn isolated_bus_is_rejected() {
    let mut case = two_bus(0.0, 0.1);
    case.buses.push(Bus::new(3, BusKind::Pq));
    assert!(matches!(case.validate(), Err(NetworkError::IsolatedBus { bus: 3 })));
}

#[test]
fn out_of_service_branch_is_kept_but_not_assembled() {
    let mut case = two_bus(0.0, 0.1);
    let mut spare = Branch::line(0, 1, 0.0, 0.05, 0.0);
    spare.in_service = false;
    case.branches.push(spare);
    let y = build_ybus(&case).unwrap().to_dense();
    assert!((y[0][0] - Complex64::new(0.0, -10.0)).norm() < 1e-12);
    let again = parse_case(&write_case(&case)).unwrap();
    assert_eq!(again.branches.len(), 2);
    assert!(!again.branches[1].in_service);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_assembly_matches_oracle(seed in 0u64..10_000, n in 2usize..30, extras: bool) {
        let case = support::random_case(seed, n, extras);
        let y = build_ybus(&case).unwrap().to_dense();
        prop_assert!(support::max_abs_diff_c(&y, &support::reference_ybus(&case)) <= 1e-12);
        let parsed = parse_case(&write_case(&case)).unwrap();
        let again = parse_case(&write_case(&parsed)).unwrap();
        prop_assert_eq!(again, parsed);
    }
}

mod support;

use gridgraph_core::cases;
use gridgraph_core::dcg::{
    dcg_solve, fast_decoupled_solve, DcgConfig, DcgIteration, FdConfig, GraphSystem, Preconditioner,
};
use gridgraph_core::engine::{build_graph, ExecMode};
use gridgraph_core::network::{
    build_decoupled, build_ybus, compute_mismatch, Branch, Bus, BusKind, Coefficients, NetworkCase, VoltageState,
};
use gridgraph_core::pipeline::newton_raphson_reference;
use gridgraph_core::{Convergence, SolveError};
use proptest::prelude::*;

fn config(tol: f64, preconditioner: Preconditioner) -> DcgConfig {
    DcgConfig {
        tol,
        max_iters: 500,
        preconditioner,
        exec: ExecMode::Deterministic,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn identity_system_takes_one_iteration() {
    let g = build_graph(5, (1..5).map(|v| (v - 1, v))).unwrap();
    let b = vec![0.3, -1.0, 2.5, 0.0, 7.0];
    let sys = GraphSystem::new(&g, vec![1.0; 5], vec![0.0; 4], vec![true; 5], b.clone()).unwrap();
    for pc in [Preconditioner::Diagonal, Preconditioner::Identity] {
        let out = dcg_solve(&sys, &[0.0; 5], &config(1e-12, pc)).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b);
    }
}

#[test]
fn diagonal_system_takes_one_iteration() {
    let g = build_graph(6, (1..6).map(|v| (v - 1, v))).unwrap();
    let diag = vec![0.5, 2.0, 10.0, 3.0, 1e3, 0.01];
    let b = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let sys = GraphSystem::new(&g, diag.clone(), vec![0.0; 5], vec![true; 6], b.clone()).unwrap();
    let out = dcg_solve(&sys, &[0.0; 6], &config(1e-12, Preconditioner::Diagonal)).unwrap();
    assert_eq!(out.iterations, 1);
    for i in 0..6 {
        assert!((out.x[i] - b[i] / diag[i]).abs() <= 1e-15 * (b[i] / diag[i]).abs());
    }
}

#[test]
fn random_systems_match_direct_solve() {
    for seed in 0..8 {
        let s = support::random_spd(seed, 10 + seed as usize, 1.0);
        let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; s.b.len()], s.b.clone()).unwrap();
        let out = dcg_solve(&sys, &vec![0.0; s.b.len()], &config(1e-12, Preconditioner::Diagonal)).unwrap();
        let direct = support::gaussian_solve(s.dense(), s.b.clone());
        let err = out.x.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "seed {seed}: {err}");
    }
}

#[test]
fn scalars_follow_the_dense_listing() {
    for seed in 0..6 {
        for pc in [Preconditioner::Diagonal, Preconditioner::Identity] {
            let s = support::random_spd(100 + seed, 6 + 2 * seed as usize, 10.0);
            let n = s.b.len();
            let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; n], s.b.clone()).unwrap();
            let out = dcg_solve(&sys, &vec![0.0; n], &config(1e-8, pc)).unwrap();
            let (_, listing) = support::dense_pcg(&s.dense(), &s.b, pc == Preconditioner::Diagonal, 1e-8, 500, None);
            assert_eq!(out.steps.len(), listing.len(), "seed {seed}");
            for (a, b) in out.steps.iter().zip(&listing) {
                assert!(rel(a.alpha, b.alpha) < 1e-12, "seed {seed}: alpha {} {}", a.alpha, b.alpha);
                assert!(rel(a.residual, b.residual) < 1e-12, "seed {seed}: r {} {}", a.residual, b.residual);
                match (a.beta, b.beta) {
                    (None, None) => {}
                    (Some(x), Some(y)) => assert!(rel(x, y) < 1e-12, "seed {seed}: beta {x} {y}"),
                    other => panic!("beta mismatch {other:?}"),
                }
            }
        }
    }
}

#[test]
fn energy_norm_error_never_grows() {
    for seed in 0..6 {
        let s = support::random_spd(200 + seed, 15, 100.0);
        let n = s.b.len();
        let a = s.dense();
        let x_star = support::gaussian_solve(a.clone(), s.b.clone());
        let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; n], s.b.clone()).unwrap();
        let mut it = DcgIteration::new(&sys, &vec![0.0; n], Preconditioner::Diagonal, ExecMode::Deterministic).unwrap();
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(&x_star).map(|(p, q)| p - q).collect();
            support::dot(&e, &support::matvec(&a, &e)).sqrt()
        };
        let mut last = energy(it.x());
        while it.residual_norm() > 1e-10 && it.iterations() < 100 {
            it.step().unwrap();
            let now = energy(it.x());
            assert!(now <= last * (1.0 + 1e-10) + 1e-14, "seed {seed}: {now} > {last}");
            last = now;
        }
    }
}

#[test]
fn terminates_within_dimension_plus_five() {
    for seed in 0..10 {
        let n = 2 + (seed as usize * 3) % 19;
        let s = support::random_spd(300 + seed, n, 10.0);
        let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; n], s.b.clone()).unwrap();
        let out = dcg_solve(&sys, &vec![0.0; n], &config(1e-10, Preconditioner::Diagonal)).unwrap();
        assert_eq!(out.termination, Convergence::Converged);
        assert!(out.iterations <= n + 5, "seed {seed}: {} > {}", out.iterations, n + 5);
    }
}

#[test]
fn diagonal_preconditioner_helps_on_wide_spread() {
    let s = support::random_spd(77, 20, 1e4);
    let n = s.b.len();
    let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; n], s.b.clone()).unwrap();
    let d = dcg_solve(&sys, &vec![0.0; n], &config(1e-8, Preconditioner::Diagonal)).unwrap();
    let c = dcg_solve(&sys, &vec![0.0; n], &config(1e-8, Preconditioner::Identity)).unwrap();
    assert!(d.iterations < c.iterations, "{} vs {}", d.iterations, c.iterations);
}

#[test]
fn indefinite_system_is_reported() {
    let g = build_graph(2, [(0, 1)]).unwrap();
    let sys = GraphSystem::new(&g, vec![1.0, 1.0], vec![3.0], vec![true; 2], vec![1.0, -1.0]).unwrap();
    let err = dcg_solve(&sys, &[0.0; 2], &config(1e-10, Preconditioner::Diagonal)).unwrap_err();
    assert!(matches!(err, SolveError::NotPositiveDefinite { .. }), "{err:?}");
}

#[test]
fn budget_exhaustion_keeps_best_iterate() {
    let s = support::random_spd(5, 20, 1e4);
    let n = s.b.len();
    let sys = GraphSystem::new(&s.graph, s.diag.clone(), s.off.clone(), vec![true; n], s.b.clone()).unwrap();
    let cfg = DcgConfig {
        max_iters: 3,
        ..config(1e-14, Preconditioner::Identity)
    };
    let out = dcg_solve(&sys, &vec![0.0; n], &cfg).unwrap();
    assert_eq!(out.termination, Convergence::BudgetExhausted);
    let initial = support::dot(&s.b, &s.b).sqrt();
    let best = out.steps.iter().map(|s| s.residual).fold(initial, f64::min);
    assert_eq!(out.residual, best);
}

#[test]
fn decoupled_b_prime_solve_matches_direct() {
    let case = cases::ieee118();
    let dg = build_decoupled(&case).unwrap();
    let n = case.bus_count();
    let rhs: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 10.0 - 0.5).collect();
    let sys = GraphSystem::from_decoupled(&dg, Coefficients::BPrime, rhs.clone()).unwrap();
    let out = dcg_solve(&sys, &vec![0.0; n], &config(1e-12, Preconditioner::Diagonal)).unwrap();
    let (idx, a) = sys.to_dense();
    let b: Vec<f64> = idx.iter().map(|&v| rhs[v]).collect();
    let direct = support::gaussian_solve(a, b);
    for (k, &v) in idx.iter().enumerate() {
        assert!((out.x[v] - direct[k]).abs() < 1e-8);
    }
}

#[test]
fn already_solved_state_needs_no_outer_iteration() {
    let case = cases::ieee14();
    let nr = newton_raphson_reference(&case, 1e-8, 30).unwrap();
    let ybus = build_ybus(&case).unwrap();
    let dg = build_decoupled(&case).unwrap();
    let out = fast_decoupled_solve(&ybus, &dg, &nr.state.v, &FdConfig::default()).unwrap();
    assert_eq!(out.outer_iterations, 0);
    assert_eq!(out.termination, Convergence::Converged);
}

#[test]
fn ieee14_from_flat_start_is_close_to_newton() {
    let case = cases::ieee14();
    let nr = newton_raphson_reference(&case, 1e-8, 30).unwrap();
    let ybus = build_ybus(&case).unwrap();
    let dg = build_decoupled(&case).unwrap();
    let out = fast_decoupled_solve(&ybus, &dg, &VoltageState::flat_start(&case).v, &FdConfig::default()).unwrap();
    assert!(out.termination.converged());
    let m = compute_mismatch(&ybus, &out.state).unwrap();
    assert!(m.mbpim < 5e-2);
    for (a, b) in out.state.iter().zip(&nr.state.v) {
        assert!((a.norm() - b.norm()).abs() < 5e-3);
    }
}

#[test]
fn isolated_pq_bus_is_an_error() {
    let mut load = Bus::new(2, BusKind::Pq);
    load.pd = 0.1;
    let case = NetworkCase {
        name: "iso".into(),
        base_mva: 100.0,
        buses: vec![Bus::new(1, BusKind::Slack), load, Bus::new(3, BusKind::Pq)],
        branches: vec![Branch::line(0, 1, 0.0, 0.1, 0.0)],
    };
    let ybus = build_ybus(&case).unwrap();
    let dg = build_decoupled(&case).unwrap();
    let err = fast_decoupled_solve(&ybus, &dg, &VoltageState::flat_start(&case).v, &FdConfig::default()).unwrap_err();
    assert!(
        matches!(err, SolveError::SingularStructure(_) | SolveError::NotPositiveDefinite { .. }),
        "{err:?}"
    );
}

#[test]
fn trace_counts_inner_iterations_cumulatively() {
    let case = cases::ieee30();
    let ybus = build_ybus(&case).unwrap();
    let dg = build_decoupled(&case).unwrap();
    let out = fast_decoupled_solve(&ybus, &dg, &VoltageState::flat_start(&case).v, &FdConfig::default()).unwrap();
    assert_eq!(out.trace.len(), out.outer_iterations);
    let inner: Vec<usize> = out.trace.records.iter().map(|r| r.inner_iterations.unwrap()).collect();
    assert!(inner.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*inner.last().unwrap(), out.inner_iterations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn accepted_states_satisfy_tolerance(seed in 0u64..10_000, n in 3usize..20, tol in prop::sample::select(vec![5e-2, 1e-3, 1e-5])) {
        let case = support::random_case(seed, n, seed % 2 == 0);
        let ybus = build_ybus(&case).unwrap();
        let dg = build_decoupled(&case).unwrap();
        let flat = VoltageState::flat_start(&case).v;
        let cfg = FdConfig::with_tolerances(tol, tol).with_exec(ExecMode::Deterministic);
        if let Ok(out) = fast_decoupled_solve(&ybus, &dg, &flat, &cfg) {
            if out.termination.converged() {
                let m = compute_mismatch(&ybus, &out.state).unwrap();
                prop_assert!(m.mbpim <= tol);
            }
        }
    }
}

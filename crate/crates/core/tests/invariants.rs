//! Property tests for the invariants of the calculus and the integrators.

use midpoint_vi::calculus::{extend, integral_midpoint, GridFunction};
use midpoint_vi::hamiltonian::{
    action_h, build_hamiltonian, discrete_momentum, integrate_hamiltonian, sh_residual,
    step_midpoint_hamiltonian, PhasePoint,
};
use midpoint_vi::lagrangian::{
    action_midpoint, el_residual_midpoint, frechet_midpoint, integrate_lagrangian,
    step_midpoint_lagrangian, wm_lagrangian,
};
use midpoint_vi::problems::MechanicalProblem;
use midpoint_vi::solver::{Method, SolverConfig};
use midpoint_vi::time_grid::{NodeKind, TimeGrid};
use proptest::prelude::*;

fn on_t(grid: &TimeGrid, rows: &[Vec<f64>]) -> GridFunction {
    GridFunction::from_rows(grid.node_set(NodeKind::T), rows).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, len)
}

fn problem(ix: usize) -> MechanicalProblem {
    [
        MechanicalProblem::free_particle(),
        MechanicalProblem::harmonic_oscillator(),
        MechanicalProblem::pendulum(),
    ][ix % 3]
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frechet_matches_central_difference(
        n in prop_oneof![Just(4usize), Just(8), Just(16)],
        ix in 0usize..3,
        seed_q in values(17),
        seed_v in values(17),
    ) {
        let g = TimeGrid::new(0.0, 1.0, n).unwrap();
        let model = problem(ix).lagrangian(1);
        let q = GridFunction::scalar(g.node_set(NodeKind::T), seed_q[..=n].to_vec()).unwrap();
        let mut vv = seed_v[..=n].to_vec();
        vv[0] = 0.0;
        vv[n] = 0.0;
        let v = GridFunction::scalar(g.node_set(NodeKind::T), vv.clone()).unwrap();
        let shifted = |eps: f64| {
            let vals = q.values().iter().zip(&vv).map(|(a, b)| a + eps * b).collect();
            action_midpoint(&model, &GridFunction::scalar(g.node_set(NodeKind::T), vals).unwrap()).unwrap()
        };
        let d = |eps: f64| (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let fd = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
        let exact = frechet_midpoint(&model, &q, &v).unwrap();
        prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1e-3), "{exact} vs {fd}");
    }

    #[test]
    fn wm_sum_equals_action(ix in 0usize..3, qs in values(9)) {
        let g = TimeGrid::new(-0.5, 1.5, 8).unwrap();
        let model = problem(ix).lagrangian(1);
        let sum: f64 = qs.windows(2).map(|w| wm_lagrangian(&model, &w[..1], &w[1..], g.step()).unwrap()).sum();
        let q = GridFunction::scalar(g.node_set(NodeKind::T), qs.clone()).unwrap();
        let action = action_midpoint(&model, &q).unwrap();
        prop_assert!((sum - action).abs() <= 1e-14 * action.abs().max(1.0));
    }

    #[test]
    fn midpoint_quadrature_of_extension_is_trapezoid(fs in values(11)) {
        let g = TimeGrid::new(0.0, 2.0, 10).unwrap();
        let f = GridFunction::scalar(g.node_set(NodeKind::T), fs.clone()).unwrap();
        let half = extend(&f).unwrap().restrict(NodeKind::THalf).unwrap();
        let mid = integral_midpoint(&half, 0, 10).unwrap()[0];
        let trap: f64 = fs.windows(2).map(|w| 0.5 * (w[0] + w[1]) * 0.2).sum();
        prop_assert!((mid - trap).abs() <= 1e-14);
        prop_assert_eq!(integral_midpoint(&half, 3, 7).unwrap()[0], -integral_midpoint(&half, 7, 3).unwrap()[0]);
    }

    #[test]
    fn step_leaves_residual_below_tolerance(ix in 0usize..3, a in -1.0f64..1.0, b in -1.0f64..1.0, h in 0.02f64..0.2) {
        let cfg = SolverConfig::default();
        let model = problem(ix).lagrangian(1);
        let q1 = a + h * b;
        let q2 = step_midpoint_lagrangian(&model, &[a], &[q1], h, &cfg).unwrap();
        let g = TimeGrid::with_step(0.0, h, 2).unwrap();
        let r = el_residual_midpoint(&model, &on_t(&g, &[vec![a], vec![q1], q2])).unwrap();
        // the rounding floor of the raw residual is a few ulps of q over h²
        prop_assert!(r.max_abs() <= cfg.tol.max(16.0 * f64::EPSILON / (h * h)), "{}", r.max_abs());
    }

    #[test]
    fn fixed_point_agrees_with_newton(a in -1.0f64..1.0, b in -1.0f64..1.0, h in 0.01f64..0.1) {
        let newton = SolverConfig::default();
        let fixed = newton.with_method(Method::FixedPoint);
        let model = MechanicalProblem::harmonic_oscillator().lagrangian(1);
        let x = step_midpoint_lagrangian(&model, &[a], &[b], h, &newton).unwrap()[0];
        let y = step_midpoint_lagrangian(&model, &[a], &[b], h, &fixed).unwrap()[0];
        prop_assert!((x - y).abs() <= 10.0 * newton.tol);
    }

    #[test]
    fn lagrangian_and_hamiltonian_runs_agree(ix in 0usize..3, q0 in -1.0f64..1.0, p0 in -1.0f64..1.0, n in 2usize..60) {
        let cfg = SolverConfig::default();
        let model = problem(ix).lagrangian(1);
        let g = TimeGrid::with_step(0.0, 0.05, n).unwrap();
        let init = PhasePoint { q: vec![q0], p: vec![p0] };
        let first = step_midpoint_hamiltonian(&model, &init, 0.05, &cfg).unwrap();
        let ham = integrate_hamiltonian(&model, &init, &g, &cfg).unwrap();
        let lag = integrate_lagrangian(&model, &[q0], &first.q, &g, &cfg).unwrap();
        let p = discrete_momentum(&model, &on_t(&g, &lag.positions())).unwrap();
        for (i, (x, y)) in ham.rows.iter().zip(&lag.rows).enumerate() {
            prop_assert!((x.q[0] - y.q[0]).abs() <= 10.0 * cfg.tol);
            prop_assert!((x.p[0] - p.at(i)[0]).abs() <= 10.0 * cfg.tol);
        }
    }

    #[test]
    fn hamiltonian_output_solves_the_system(ix in 0usize..3, q0 in -1.0f64..1.0, p0 in -1.0f64..1.0, n in 2usize..40) {
        let cfg = SolverConfig::default();
        let model = problem(ix).lagrangian(1);
        let ham = build_hamiltonian(&model, &cfg);
        let g = TimeGrid::with_step(0.0, 0.1, n).unwrap();
        let rec = integrate_hamiltonian(&model, &PhasePoint { q: vec![q0], p: vec![p0] }, &g, &cfg).unwrap();
        let r = sh_residual(&ham, &on_t(&g, &rec.positions()), &on_t(&g, &rec.momenta())).unwrap();
        // position equations are divided by h relative to the solved form
        prop_assert!(r.max_abs() <= 10.0 * cfg.tol / 0.1, "{}", r.max_abs());
        prop_assert!(r.boundary[0][0].abs() <= 10.0 * cfg.tol / 0.1);
        prop_assert!(r.boundary[1][0].abs() <= 10.0 * cfg.tol / 0.1);
    }

    #[test]
    fn harmonic_conserves_quadratic_invariant(q0 in -1.0f64..1.0, p0 in -1.0f64..1.0, h in 0.01f64..0.3) {
        let cfg = SolverConfig::default();
        let n = 300;
        let g = TimeGrid::with_step(0.0, h, n).unwrap();
        let model = MechanicalProblem::harmonic_oscillator().lagrangian(1);
        let rec = integrate_hamiltonian(&model, &PhasePoint { q: vec![q0], p: vec![p0] }, &g, &cfg).unwrap();
        let r0 = q0 * q0 + p0 * p0;
        for row in &rec.rows {
            prop_assert!((row.q[0].powi(2) + row.p[0].powi(2) - r0).abs() <= n as f64 * 10.0 * cfg.tol);
        }
    }

    #[test]
    fn reversed_trajectory_is_critical(ix in 0usize..3, q0 in -1.0f64..1.0, v0 in -1.0f64..1.0, n in 2usize..40) {
        let cfg = SolverConfig::default();
        let model = problem(ix).lagrangian(1);
        let g = TimeGrid::with_step(0.0, 0.1, n).unwrap();
        let rec = integrate_lagrangian(&model, &[q0], &[q0 + 0.1 * v0], &g, &cfg).unwrap();
        let mut rows = rec.positions();
        rows.reverse();
        prop_assert!(el_residual_midpoint(&model, &on_t(&g, &rows)).unwrap().max_abs() <= 1e-10);
    }
}

#[test]
fn final_momentum_derivative_matches_boundary_equation() {
    // ∂action_H/∂p(t_N) = (h/2)·(position equation at t_{N-1/2})
    let cfg = SolverConfig::default();
    let model = MechanicalProblem::pendulum().lagrangian(1);
    let ham = build_hamiltonian(&model, &cfg);
    let g = TimeGrid::with_step(0.0, 0.1, 6).unwrap();
    let q = on_t(&g, &[0.1, 0.3, 0.2, -0.4, 0.0, 0.5, 0.7].map(|x| vec![x]));
    let p = on_t(&g, &[0.0, 1.0, -0.3, 0.2, 0.8, -0.6, 0.25].map(|x| vec![x]));
    let boundary = sh_residual(&ham, &q, &p).unwrap().boundary[1][0];
    let eps = 1e-6;
    let bumped = |s: f64| {
        let mut pp = p.clone();
        pp.at_mut(6)[0] += s;
        action_h(&ham, &pp, &q).unwrap()
    };
    let fd = (bumped(eps) - bumped(-eps)) / (2.0 * eps);
    assert!((fd - 0.05 * boundary).abs() <= 1e-8, "{fd} vs {}", 0.05 * boundary);
    assert!(boundary.abs() > 1e-2);
}

#[test]
fn free_particle_exact_trajectory_has_zero_residual() {
    let cfg = SolverConfig::default();
    let model = MechanicalProblem::free_particle().lagrangian(2);
    let ham = build_hamiltonian(&model, &cfg);
    let g = TimeGrid::new(0.0, 1.0, 5).unwrap();
    let q = GridFunction::sample(g.node_set(NodeKind::T), 2, |t| vec![1.0 + 2.0 * t, -t]).unwrap();
    let p = GridFunction::sample(g.node_set(NodeKind::T), 2, |_| vec![2.0, -1.0]).unwrap();
    assert!(sh_residual(&ham, &q, &p).unwrap().max_abs() < 1e-14);
}

#[test]
fn builtin_models_pass_self_check() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for ix in 0..3 {
        let check = problem(ix).lagrangian(3).self_check(&mut rng, 50, 2.0);
        assert!(check.passes(), "{check:?}");
    }
}

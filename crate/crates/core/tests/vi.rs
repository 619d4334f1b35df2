mod common;

use common::{active_set_oracle, grid, max_diff, random_instance};
use fracperf::grid::Field;
use fracperf::vi::{residual_report, solve, Engine, Ordering, SolveOptions, ViProblem};
use proptest::prelude::*;

#[test]
fn random_instances_match_active_set_enumeration() {
    for seed in 0..100 {
        let p = random_instance(seed);
        let exact = active_set_oracle(&p).expect("oracle found no KKT point");
        for engine in [Engine::Grid, Engine::Trace] {
            let opts = SolveOptions::default().with_tol(1e-12).with_engine(engine);
            let s = solve(&p, &opts).unwrap();
            let d = max_diff(s.field.values(), &exact);
            assert!(d < 1e-8, "seed {seed} {engine:?}: {d}");
        }
    }
}

#[test]
fn red_black_matches_oracle() {
    for seed in 100..120 {
        let p = random_instance(seed);
        let exact = active_set_oracle(&p).unwrap();
        let opts = SolveOptions::default().with_tol(1e-12).with_engine(Engine::Grid).with_ordering(Ordering::RedBlack);
        let s = solve(&p, &opts).unwrap();
        assert!(max_diff(s.field.values(), &exact) < 1e-8, "seed {seed}");
    }
}

#[test]
fn solution_is_independent_of_initial_guess() {
    let g = grid(1, 33, 12, 0.5);
    let mut p = ViProblem::new(&g);
    for i in g.sigma_nodes() {
        let x = g.x_coord(i);
        p.set_lower_bound(i, 0.5 - 4.0 * (x - 0.5) * (x - 0.5)).unwrap();
    }
    let opts = SolveOptions::default().with_tol(1e-12).with_engine(Engine::Grid);
    let a = solve(&p, &opts).unwrap();
    let init: Vec<f64> = (0..g.node_count()).map(|i| ((i * 7919) % 13) as f64 / 3.0).collect();
    let b = solve(&p, &opts.clone().with_initial(init)).unwrap();
    assert!(max_diff(a.field.values(), b.field.values()) < 1e-9);
    assert_eq!(a.contact_nodes, b.contact_nodes);
}

#[test]
fn raising_the_obstacle_raises_the_solution() {
    let g = grid(1, 41, 16, 0.0);
    let phi = |x: f64| 0.6 - 6.0 * (x - 0.4) * (x - 0.4);
    let build = |shift: f64| {
        let mut p = ViProblem::new(&g);
        for i in g.sigma_nodes() {
            p.set_lower_bound(i, phi(g.x_coord(i)) + shift * (i % 2) as f64).unwrap();
        }
        p
    };
    let opts = SolveOptions::default().with_tol(1e-12);
    let lo = solve(&build(0.0), &opts).unwrap();
    let hi = solve(&build(0.05), &opts).unwrap();
    for (a, b) in lo.field.values().iter().zip(hi.field.values()) {
        assert!(b >= &(a - 1e-10));
    }
}

#[test]
fn unconstrained_problem_is_weighted_harmonic() {
    let g = grid(1, 17, 10, 0.5);
    let p = ViProblem::new(&g).with_gamma_value(0.3);
    let s = solve(&p, &SolveOptions::default().with_tol(1e-12)).unwrap();
    assert!(s.field.values().iter().all(|v| (v - 0.3).abs() < 1e-10));
    let r = p.residual(s.field.values());
    assert!(r.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn report_of_exact_solution_is_clean() {
    for seed in 0..10 {
        let p = random_instance(seed);
        let exact = active_set_oracle(&p).unwrap();
        let f = Field::new(p.grid(), exact).unwrap();
        let rep = residual_report(&p, &f, 1e-8).unwrap();
        assert!(rep.is_clean(), "seed {seed}: {:?}", rep.flags);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_respect_obstacles_and_sign_conditions(
        phis in proptest::collection::vec(-1.0f64..1.0, 7),
        g0 in -0.5f64..0.5,
        a in prop_oneof![Just(-0.5f64), Just(0.0), Just(0.5)],
    ) {
        let g = grid(1, 9, 6, a);
        let mut p = ViProblem::new(&g).with_gamma_value(g0);
        for (k, i) in g.sigma_nodes().into_iter().enumerate() {
            p.set_lower_bound(i, phis[k]).unwrap();
        }
        let s = solve(&p, &SolveOptions::default().with_tol(1e-11)).unwrap();
        let u = s.field.values();
        let r = p.residual(u);
        let d = g.diagonal();
        for (k, i) in g.sigma_nodes().into_iter().enumerate() {
            let rh = r[i] / d[i];
            prop_assert!(u[i] >= phis[k] - 1e-12);
            prop_assert!(rh >= -1e-10);
            if u[i] > phis[k] + 1e-9 {
                prop_assert!(rh.abs() < 1e-10);
            }
        }
        // maximum principle: the solution lies between the data and the largest obstacle
        let top = phis.iter().cloned().fold(g0, f64::max);
        prop_assert!(u.iter().all(|v| *v <= top + 1e-9 && *v >= g0 - 1e-9));
    }
}

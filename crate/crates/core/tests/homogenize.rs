mod common;

use fracperf::homogenize::{
    effective_problem, hole_potential, perforated_problem, run_study, sandwich_energy, solve_effective,
    solve_perforated, Alpha0Source, Obstacle, StudyConfig,
};
use fracperf::numerics::FractionalOrder;
use fracperf::perforations::GammaLaw;
use fracperf::vi::{solve, SolveOptions};

fn desk(law: GammaLaw, nx: usize) -> StudyConfig {
    let order = FractionalOrder::new(1, 0.25).unwrap();
    StudyConfig::desk(order, law, vec![0.25, 0.125], nx, vec![0, 1])
}

#[test]
fn zero_law_gives_the_unconstrained_solution() {
    let mut c = desk(GammaLaw::constant(0.0), 257);
    c.boundary_value = 0.4;
    c.tol = 1e-12;
    let s = solve_perforated(&c, 0.125, 0).unwrap();
    assert!(s.field.values().iter().all(|v| (v - 0.4).abs() < 1e-8));
}

#[test]
fn low_obstacle_is_inactive() {
    let mut c = desk(GammaLaw::constant(1.0), 513);
    c.boundary_value = 0.5;
    c.obstacle = Obstacle::Constant { value: 0.2 };
    c.tol = 1e-12;
    let s = solve_perforated(&c, 0.125, 0).unwrap();
    assert!(s.contact_nodes.is_empty());
    let worst = s.field.values().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst} after {} sweeps on {:?}", s.iterations, s.engine);
    let e = solve_effective(&c, 1.0).unwrap();
    assert!(e.field.values().iter().all(|v| (v - 0.5).abs() < 1e-8));
}

#[test]
fn perforated_solution_respects_holes_and_refines() {
    let c = desk(GammaLaw::constant(1.0), 2049);
    let fine = solve_perforated(&c, 0.125, 0).unwrap();
    let grid = fine.field.grid().clone();
    let p = perforated_problem(&c, &grid, 0.125, 0).unwrap();
    for node in p.constrained_nodes() {
        assert!(fine.field.values()[node] >= p.lower_bounds()[node].unwrap() - 1e-12);
    }
    let mut half = c.clone();
    half.grid.nx = 1025;
    let coarse = solve_perforated(&half, 0.125, 0).unwrap();
    assert!((coarse.objective / fine.objective - 1.0).abs() < 0.1, "{} {}", coarse.objective, fine.objective);
}

#[test]
fn effective_with_zero_alpha_is_unconstrained() {
    let mut c = desk(GammaLaw::constant(1.0), 129);
    c.boundary_value = -0.2;
    c.tol = 1e-12;
    let s = solve_effective(&c, 0.0).unwrap();
    assert!(s.field.values().iter().all(|v| (v + 0.2).abs() < 1e-8));
    assert!(solve_effective(&c, -1.0).unwrap_err().is_config());
}

#[test]
fn single_boundary_node_matches_scalar_minimization() {
    let mut c = desk(GammaLaw::constant(1.0), 3);
    c.grid.y_max = Some(0.5);
    c.obstacle = Obstacle::Constant { value: 0.8 };
    let grid = c.fine_grid().unwrap();
    let sigma = grid.sigma_nodes();
    assert_eq!(sigma.len(), 1);
    let i = sigma[0];
    let a = common::stiffness(&grid);
    let alpha = 3.0;
    let beta = alpha * grid.x_measure(i);
    // interior nodes above the boundary node couple to it; eliminate them exactly
    let free: Vec<usize> = (0..grid.node_count()).filter(|&p| !grid.is_gamma(p)).collect();
    let m = free.len();
    let mut mat = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for (r, &p) in free.iter().enumerate() {
        for (k, &q) in free.iter().enumerate() {
            mat[r][k] = a[p][q];
        }
        if p == i {
            mat[r][r] += beta;
            rhs[r] = beta * 0.8;
        }
    }
    let exact = common::dense_solve(mat, rhs);
    let u_i = exact[free.iter().position(|&p| p == i).unwrap()];
    assert!(u_i < 0.8);
    let s = solve_effective(&c, alpha).unwrap();
    assert!((s.field.values()[i] - u_i).abs() < 1e-9);
}

#[test]
fn effective_solution_is_monotone_in_alpha() {
    let c = desk(GammaLaw::constant(1.0), 257);
    let lo = solve_effective(&c, 0.5).unwrap();
    let hi = solve_effective(&c, 2.0).unwrap();
    for (a, b) in lo.field.values().iter().zip(hi.field.values()) {
        assert!(b >= &(a - 1e-10));
    }
    assert!(hi.objective >= lo.objective);
    let grid = lo.field.grid();
    let below = grid.sigma_nodes().into_iter().filter(|&i| lo.field.values()[i] < c.obstacle.eval(&grid.x_of(i)));
    assert!(below.count() > 0);
}

#[test]
fn perforated_energy_is_below_the_sandwich_competitor() {
    let c = desk(GammaLaw::uniform(0.5, 1.5), 1025);
    let eff = solve_effective(&c, 1.0).unwrap();
    for &eps in &c.eps {
        let u = solve_perforated(&c, eps, 1).unwrap();
        let w = hole_potential(&c, u.field.grid(), eps, 1).unwrap();
        let z = sandwich_energy(&c, &eff.field, &w).unwrap();
        assert!(u.objective <= z + 1e-9, "eps {eps}: {} > {z}", u.objective);
    }
}

#[test]
fn study_rows_share_the_effective_run() {
    let c = desk(GammaLaw::uniform(0.5, 1.5), 1025);
    let rep = run_study(&c).unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.rows.iter().all(|r| r.energy_eff == rep.energy_eff));
    assert!(rep.rows.iter().all(|r| r.l2_bulk >= 0.0 && r.l2_trace >= 0.0 && (0.0..=1.0).contains(&r.contact_frac)));
    assert_eq!(rep.rows[0].eps, 0.25);
    assert_eq!(rep.rows[0].seed, 0);
    let again = run_study(&c).unwrap();
    assert_eq!(rep, again);
}

#[test]
fn per_eps_grids_are_compared_on_the_finest() {
    let mut c = desk(GammaLaw::constant(1.0), 1025);
    c.grid.nx_per_eps = Some(vec![513, 1025]);
    let rep = run_study(&c).unwrap();
    assert_eq!(rep.aggregates[0].nx, 513);
    assert_eq!(rep.aggregates[1].nx, 1025);
    // the coarse run, computed on the fine grid directly, gives a nearby trace distance
    let mut same = c.clone();
    same.grid.nx_per_eps = None;
    let rep2 = run_study(&same).unwrap();
    let d = (rep.aggregates[0].l2_trace.mean - rep2.aggregates[0].l2_trace.mean).abs();
    assert!(d < 0.1 * rep2.aggregates[0].l2_trace.mean, "{d}");
}

#[test]
fn estimated_alpha_source_reports_a_bracket() {
    let mut c = desk(GammaLaw::constant(1.0), 257);
    c.alpha0 = Alpha0Source::Estimated {
        t: 8,
        seeds: vec![0, 1],
        cell: fracperf::cell::CellParams { nodes_per_cell: 8, ..Default::default() },
        search: Default::default(),
    };
    let v = fracperf::homogenize::resolve_alpha0(&c).unwrap();
    let (lo, hi) = v.bracket.unwrap();
    assert!(lo <= v.value && v.value <= hi);
    let p = effective_problem(&c, &c.fine_grid().unwrap(), v.value).unwrap();
    assert!(solve(&p, &SolveOptions::default()).is_ok());
}

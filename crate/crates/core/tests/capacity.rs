use fracperf::capacity::{estimate_capacity, BoundarySet, CapacityParams};
use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use fracperf::perforations::critical_radius;

fn order() -> FractionalOrder {
    FractionalOrder::new(1, 0.25).unwrap()
}

fn cap(set: &BoundarySet, spacing: f64) -> f64 {
    let mut p = CapacityParams::for_set(set, 8);
    p.spacing = spacing;
    estimate_capacity(set, &order(), &p).unwrap().value
}

#[test]
fn hole_of_unit_density_has_capacity_eps() {
    let o = order();
    let c = NormalizationConstants::for_order(&o);
    let eps = 1.0 / 8.0;
    let r = critical_radius(&o, &c, 1.0, eps);
    let set = BoundarySet::ball(1, r);
    let est = estimate_capacity(&set, &o, &CapacityParams::for_set(&set, 32)).unwrap();
    assert!((est.value / eps - 1.0).abs() < 0.05, "{}", est.value);
}

#[test]
fn capacity_is_monotone_under_inclusion() {
    let small = BoundarySet::Intervals { intervals: vec![[-1.0, 1.0]] };
    let large = BoundarySet::Intervals { intervals: vec![[-1.0, 1.5]] };
    assert!(cap(&small, 0.125) < cap(&large, 0.125));
}

#[test]
fn capacity_is_subadditive() {
    let a = BoundarySet::Intervals { intervals: vec![[-2.0, -1.0]] };
    let b = BoundarySet::Intervals { intervals: vec![[1.0, 2.0]] };
    let ab = BoundarySet::two_intervals(1.0, 2.0);
    let (ca, cb, cab) = (cap(&a, 0.125), cap(&b, 0.125), cap(&ab, 0.125));
    assert!((ca - cb).abs() < 1e-9 * ca);
    assert!(cab <= ca + cb);
    assert!(cab >= ca);
}

#[test]
fn raw_capacities_increase_towards_the_limit() {
    // a nearer Dirichlet shell holds more charge; extrapolation removes it
    let set = BoundarySet::ball(1, 1.0);
    let est = estimate_capacity(&set, &order(), &CapacityParams::for_set(&set, 16)).unwrap();
    let raw: Vec<f64> = est.raw.iter().map(|r| r.capacity).collect();
    assert!(raw.windows(2).all(|w| w[1] < w[0]));
    assert!(est.value < raw[raw.len() - 1]);
    assert!(est.extrapolated);
}

#[test]
fn two_dimensional_disk() {
    let o = FractionalOrder::new(2, 0.5).unwrap();
    let c = NormalizationConstants::for_order(&o);
    let set = BoundarySet::ball(2, 1.0);
    let mut p = CapacityParams::for_set(&set, 8);
    p.r_out = vec![4.0, 8.0];
    let est = estimate_capacity(&set, &o, &p).unwrap();
    assert!((est.value / c.ball_cap_const - 1.0).abs() < 0.15, "{} vs {}", est.value, c.ball_cap_const);
}

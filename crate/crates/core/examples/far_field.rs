//! Capacitary potential far from the set versus `cap · (2/μ) · h`, for a
//! ball and for two separated half-length intervals.

use fracperf::capacity::{far_field_check, BoundarySet, CapacityParams};
use fracperf::numerics::{FractionalOrder, NormalizationConstants};

fn main() -> fracperf::Result<()> {
    let order = FractionalOrder::new(1, 0.25)?;
    let constants = NormalizationConstants::for_order(&order);
    let sets = [("ball", BoundarySet::ball(1, 1.0)), ("two intervals", BoundarySet::two_intervals(1.0, 1.0))];
    for (name, set) in sets {
        let d = set.diameter();
        let params = CapacityParams::for_set(&set, 24);
        let probes: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|f| f * d).collect();
        let report = far_field_check(&set, &order, &constants, &params, &probes)?;
        println!("{name}: capacity {:.6}", report.capacity.value);
        for row in &report.rows {
            println!("    rho = {:>5}: potential {:.6}, ratio {:.4}", row.rho, row.potential, row.ratio);
        }
    }
    Ok(())
}

//! Capacity of B_r and B_2r at a shared grid spacing, and the ratio
//! against the power law 2^{n-2s}.

use fracperf::capacity::{estimate_capacity, BoundarySet, CapacityParams};
use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use std::time::Instant;

fn main() -> fracperf::Result<()> {
    let nodes_per_radius: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    for s in [0.25, 0.4] {
        let order = FractionalOrder::new(1, s)?;
        let c = NormalizationConstants::for_order(&order);
        let r = 1.0;
        let small = BoundarySet::ball(1, r);
        let large = BoundarySet::ball(1, 2.0 * r);
        let spacing = r / nodes_per_radius as f64;
        let mut params = CapacityParams::for_set(&small, 1);
        params.spacing = spacing;
        let t = Instant::now();
        let cs = estimate_capacity(&small, &order, &params)?;
        let mut params2 = CapacityParams::for_set(&large, 1);
        params2.spacing = spacing;
        let cl = estimate_capacity(&large, &order, &params2)?;
        println!(
            "s = {s}: cap(B_r) = {:.6} (closed form {:.6}), cap(B_2r) = {:.6}, ratio = {:.5} vs {:.5}  [{:.1?}]",
            cs.value,
            c.ball_cap_const * r.powf(order.ext_exp()),
            cl.value,
            cl.value / cs.value,
            2f64.powf(order.ext_exp()),
            t.elapsed()
        );
        for raw in &cs.raw {
            println!("    R = {:>6}: nx = {}, ny = {}, capacity = {:.6}", raw.r_out, raw.nx, raw.ny, raw.capacity);
        }
    }
    Ok(())
}

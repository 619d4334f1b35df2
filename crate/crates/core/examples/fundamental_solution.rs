//! Normalization constants of `h` and its boundary flux at several heights.

use fracperf::numerics::{boundary_flux_integral, fundamental_h, FractionalOrder, NormalizationConstants};

fn main() -> fracperf::Result<()> {
    for (n, s) in [(1, 0.1), (1, 0.25), (1, 0.4), (2, 0.25), (2, 0.5)] {
        let order = FractionalOrder::new(n, s)?;
        let c = NormalizationConstants::for_order(&order);
        println!("n = {n}, s = {s}: nu = {:.8}, mu = {:.8}, ball cap const = {:.6}", c.nu, c.mu, c.ball_cap_const);
        for y in [0.25, 1.0, 4.0] {
            let flux = boundary_flux_integral(&order, &c, y, 1e3 * y)?;
            let x = vec![1.0; n];
            println!("    y = {y:>4}: flux {flux:.10}, h(1, y) = {:.6}", fundamental_h(&order, &c, &x, y)?);
        }
    }
    Ok(())
}

//! Finite-window bias of α₀: the cell estimate approaches the flux-balance
//! value as the window T and the slab height grow.

use fracperf::cell::{estimate_alpha0, AlphaSearch, CellParams};
use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use fracperf::perforations::GammaLaw;
use std::time::Instant;

fn main() -> fracperf::Result<()> {
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.25);
    let order = FractionalOrder::new(1, s)?;
    let constants = NormalizationConstants::for_order(&order);
    let law = GammaLaw::constant(1.0);
    let seeds = [0, 1];
    for height_factor in [0.5, 2.0] {
        for t in [8, 16, 32, 64, 128] {
            let params = CellParams { nodes_per_cell: 8, height_factor, ..CellParams::default() };
            let start = Instant::now();
            let est = estimate_alpha0(&law, &order, &constants, &params, t, &seeds, &AlphaSearch::default())?;
            println!(
                "height {height_factor}·T, T = {t:>3}: alpha0 = {:.4} (flux balance {:.4})  [{:.1?}]",
                est.alpha0,
                est.flux_balance,
                start.elapsed()
            );
        }
    }
    Ok(())
}

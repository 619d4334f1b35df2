//! Contact density of the cell problem along an α scan, and the bisection
//! estimate of α₀ next to the flux-balance value E[γ̃].

use fracperf::cell::{estimate_alpha0, estimate_ell, AlphaSearch, CellParams};
use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use fracperf::perforations::GammaLaw;
use std::time::Instant;

fn main() -> fracperf::Result<()> {
    let order = FractionalOrder::new(1, 0.25)?;
    let constants = NormalizationConstants::for_order(&order);
    let params = CellParams::default();
    let t = 8;
    let seeds: Vec<u64> = (0..8).collect();
    for (name, law) in [("constant", GammaLaw::constant(1.0)), ("uniform", GammaLaw::uniform(0.5, 1.5))] {
        let start = Instant::now();
        println!("{name} law, T = {t}");
        for alpha in [-0.5, -0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let s = estimate_ell(alpha, t, &law, &order, &constants, &params, &seeds)?;
            println!("    alpha = {alpha:>5}: contact {:.4} ± {:.4}", s.mean, s.stderr);
        }
        let est = estimate_alpha0(&law, &order, &constants, &params, t, &seeds, &AlphaSearch::default())?;
        println!(
            "    alpha0 = {:.4}, bracket [{:.4}, {:.4}], flux balance {:.4}  [{:.1?}]",
            est.alpha0,
            est.bracket.0,
            est.bracket.1,
            est.flux_balance,
            start.elapsed()
        );
    }
    Ok(())
}

//! ε-sweep of the perforated problem against its effective limit.
//!
//! Usage: `cargo run --release --example homogenization_study [s] [nx]`

use fracperf::homogenize::{decreasing_with_slack, run_study, StudyConfig};
use fracperf::numerics::FractionalOrder;
use fracperf::perforations::GammaLaw;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let s: f64 = args.get(1).map_or(Ok(0.25), |a| a.parse())?;
    let nx: usize = args.get(2).map_or(Ok(2049), |a| a.parse())?;
    let order = FractionalOrder::new(1, s)?;
    let config = StudyConfig::desk(order, GammaLaw::constant(1.0), vec![0.25, 0.125, 0.0625], nx, vec![0, 1, 2, 3]);

    let start = Instant::now();
    let report = run_study(&config).map_err(|a| a.error)?;
    println!("alpha0 = {} ({})", report.provenance.alpha0.value, report.provenance.alpha0.source);
    println!("J_alpha(ubar) = {:.6}", report.energy_eff);
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "eps", "l2_trace", "l2_bulk", "energy_gap", "contact");
    for a in &report.aggregates {
        println!(
            "{:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4}",
            a.eps, a.l2_trace.mean, a.l2_bulk.mean, a.energy_gap.mean, a.contact_frac.mean
        );
    }
    println!("trace distance decreasing (10% slack): {}", decreasing_with_slack(&report.mean_l2_trace(), 0.1));
    println!("energy gap decreasing (10% slack): {}", decreasing_with_slack(&report.mean_energy_gap(), 0.1));
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}

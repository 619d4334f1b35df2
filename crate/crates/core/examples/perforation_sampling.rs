//! Samples the random perforations at a few ε and prints the capacity budget.

use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use fracperf::perforations::{sample, GammaLaw, SigmaBox};

fn main() -> fracperf::Result<()> {
    let order = FractionalOrder::new(1, 0.25)?;
    let c = NormalizationConstants::for_order(&order);
    let law = GammaLaw::uniform(0.5, 1.5);
    let domain = SigmaBox::unit(1);
    for eps in [0.25, 0.125, 0.0625, 0.03125] {
        let set = sample(&law, eps, &domain, &order, &c, 7, None)?;
        let rmax = set.entries.iter().map(|e| e.radius).fold(0.0, f64::max);
        println!(
            "eps = {eps:<8} holes {:>3}, total capacity {:.4}, min radius {:.3e}, max radius {rmax:.3e}",
            set.entries.len(),
            set.total_capacity(),
            set.min_positive_radius().unwrap_or(0.0)
        );
    }
    let set = sample(&law, 0.125, &domain, &order, &c, 7, None)?;
    set.write_csv(std::io::stdout().lock())?;
    Ok(())
}

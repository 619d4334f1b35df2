use fracperf::numerics::{FractionalOrder, NormalizationConstants};
use fracperf::perforations::{gamma_at, sample, GammaLaw, SigmaBox};

fn setup() -> (FractionalOrder, NormalizationConstants) {
    let o = FractionalOrder::new(1, 0.25).unwrap();
    let c = NormalizationConstants::for_order(&o);
    (o, c)
}

#[test]
fn uniform_moments_over_many_lattice_points() {
    let law = GammaLaw::uniform(0.5, 1.5);
    for (count, slack) in [(1_000i64, 5.0), (10_000, 5.0)] {
        let xs: Vec<f64> = (0..count).map(|k| gamma_at(&law, 11, &[k])).collect();
        let n = count as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        // the uniform law on (0.5, 1.5) has mean 1 and variance 1/12
        assert!((mean - 1.0).abs() < slack * (1.0f64 / 12.0 / n).sqrt(), "{count}: {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.1 / 12.0 * (10_000.0 / n).sqrt() * 3.0, "{count}: {var}");
        assert!(xs.iter().all(|x| (0.5..=1.5).contains(x)));
    }
}

#[test]
fn bernoulli_frequency() {
    let law = GammaLaw::bernoulli(0.3, 2.0);
    let n = 10_000;
    let on = (0..n).filter(|&k| gamma_at(&law, 5, &[k, -k]) == 2.0).count() as f64;
    let sd = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((on / n as f64 - 0.3).abs() < 5.0 * sd);
}

#[test]
fn draws_do_not_depend_on_eps() {
    let (o, c) = setup();
    let law = GammaLaw::uniform(0.2, 1.0);
    let dom = SigmaBox::unit(1);
    let a = sample(&law, 1.0 / 8.0, &dom, &o, &c, 3, None).unwrap();
    let b = sample(&law, 1.0 / 16.0, &dom, &o, &c, 3, None).unwrap();
    for e in &a.entries {
        let f = b.entries.iter().find(|f| f.k == e.k).unwrap();
        assert_eq!(e.gamma, f.gamma);
    }
    let other = sample(&law, 1.0 / 8.0, &dom, &o, &c, 4, None).unwrap();
    assert_ne!(a.entries.iter().map(|e| e.gamma).collect::<Vec<_>>(), other.entries.iter().map(|e| e.gamma).collect::<Vec<_>>());
}

#[test]
fn seeds_are_uncorrelated() {
    let law = GammaLaw::uniform(0.0, 1.0);
    let n = 10_000;
    let x: Vec<f64> = (0..n).map(|k| gamma_at(&law, 1, &[k])).collect();
    let y: Vec<f64> = (0..n).map(|k| gamma_at(&law, 2, &[k])).collect();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n as f64;
    let corr = cov / (1.0 / 12.0);
    assert!(corr.abs() < 5.0 / (n as f64).sqrt(), "{corr}");
}

#[test]
fn radii_carry_the_prescribed_capacity() {
    let (o, c) = setup();
    let law = GammaLaw::uniform(0.5, 1.5);
    let set = sample(&law, 1.0 / 32.0, &SigmaBox::unit(1), &o, &c, 9, None).unwrap();
    assert_eq!(set.entries.len(), 31);
    for e in &set.entries {
        let cap = c.ball_cap_const * e.radius.powf(o.ext_exp());
        assert!((cap / (e.gamma / 32.0) - 1.0).abs() < 1e-12);
        assert!(e.radius <= set.envelope * (1.0f64 / 32.0).powf(o.crit_exp()) * (1.0 + 1e-12));
    }
}

#[test]
fn total_capacity_approaches_the_mean_density() {
    let (o, c) = setup();
    let law = GammaLaw::uniform(0.5, 1.5);
    let eps = 1.0 / 64.0;
    let dom = SigmaBox::unit(1);
    let totals: Vec<f64> =
        (0..20).map(|seed| sample(&law, eps, &dom, &o, &c, seed, None).unwrap().total_capacity()).collect();
    let mean = totals.iter().sum::<f64>() / totals.len() as f64;
    // 63 interior lattice points: E = 63/64
    assert!((mean - 63.0 / 64.0).abs() < 0.03, "{mean}");
    let two_d = sample(&GammaLaw::constant(1.0), 1.0 / 16.0, &SigmaBox::unit(2), &FractionalOrder::new(2, 0.5).unwrap(),
        &NormalizationConstants::for_order(&FractionalOrder::new(2, 0.5).unwrap()), 0, None).unwrap();
    assert_eq!(two_d.entries.len(), 225);
    assert!((two_d.total_capacity() - 225.0 / 256.0).abs() < 1e-12);
}

#[test]
fn csv_has_one_row_per_hole() {
    let (o, c) = setup();
    let set = sample(&GammaLaw::constant(1.0), 0.25, &SigmaBox::unit(1), &o, &c, 0, None).unwrap();
    let mut buf = Vec::new();
    set.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("k,gamma,radius,center\n"));
}

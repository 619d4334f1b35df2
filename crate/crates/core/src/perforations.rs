//! Random perforations `T_ε(ω)` at the critical scale.
//!
//! Every lattice point `εk` inside `Σ` carries a ball of radius
//! `r_k = (γ_k / c)^{1/(n-2s)} ε^{n/(n-2s)}`, so that its capacity is exactly
//! `ε^n γ_k`. The draws `γ_k` come from a generator keyed by `(seed, k)` and
//! therefore do not depend on `ε`.

use crate::error::{Error, Result};
use crate::grid::ExtensionGrid;
use crate::numerics::{FractionalOrder, NormalizationConstants};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Distribution of the capacity densities `γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawKind {
    Constant { gamma: f64 },
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64, gamma_on: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaLaw {
    pub kind: LawKind,
    /// Upper bound `γ̄`; defaults to the top of the support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    /// Optional lower bound `γ_ > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_lower: Option<f64>,
}

impl GammaLaw {
    pub fn constant(gamma: f64) -> Self {
        GammaLaw { kind: LawKind::Constant { gamma }, gamma_bar: None, gamma_lower: None }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        GammaLaw { kind: LawKind::Uniform { lo, hi }, gamma_bar: None, gamma_lower: None }
    }

    pub fn bernoulli(p: f64, gamma_on: f64) -> Self {
        GammaLaw { kind: LawKind::Bernoulli { p, gamma_on }, gamma_bar: None, gamma_lower: None }
    }

    pub fn with_gamma_bar(mut self, g: f64) -> Self {
        self.gamma_bar = Some(g);
        self
    }

    pub fn with_gamma_lower(mut self, g: f64) -> Self {
        self.gamma_lower = Some(g);
        self
    }

    /// Smallest and largest value the law can produce.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            LawKind::Constant { gamma } => (gamma, gamma),
            LawKind::Uniform { lo, hi } => (lo, hi),
            LawKind::Bernoulli { p, gamma_on } => {
                let lo = if p < 1.0 { 0.0 } else { gamma_on };
                let hi = if p > 0.0 { gamma_on } else { 0.0 };
                (lo, hi)
            }
        }
    }

    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar.unwrap_or(self.support().1)
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            LawKind::Constant { gamma } => gamma,
            LawKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            LawKind::Bernoulli { p, gamma_on } => p * gamma_on,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            LawKind::Constant { .. } => 0.0,
            LawKind::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            LawKind::Bernoulli { p, gamma_on } => p * (1.0 - p) * gamma_on * gamma_on,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        let (lo, hi) = self.support();
        lo == hi
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must be finite")))
            }
        };
        match self.kind {
            LawKind::Constant { gamma } => {
                finite(gamma, "gamma")?;
                if gamma < 0.0 {
                    return Err(Error::config(format!("gamma must be >= 0, got {gamma}")));
                }
            }
            LawKind::Uniform { lo, hi } => {
                finite(lo, "lo")?;
                finite(hi, "hi")?;
                if !(0.0 <= lo && lo <= hi) {
                    return Err(Error::config(format!("uniform law needs 0 <= lo <= hi, got ({lo}, {hi})")));
                }
            }
            LawKind::Bernoulli { p, gamma_on } => {
                finite(gamma_on, "gamma_on")?;
                if !(0.0..=1.0).contains(&p) || gamma_on < 0.0 {
                    return Err(Error::config(format!(
                        "bernoulli law needs p in [0,1] and gamma_on >= 0, got ({p}, {gamma_on})"
                    )));
                }
            }
        }
        let (lo, hi) = self.support();
        let bar = self.gamma_bar();
        if !(bar >= 0.0) || hi > bar {
            return Err(Error::config(format!("law reaches {hi}, above gamma_bar = {bar}")));
        }
        if let Some(gl) = self.gamma_lower {
            if !(gl > 0.0) || lo < gl {
                return Err(Error::config(format!(
                    "law reaches {lo}, below the required lower bound {gl}"
                )));
            }
        }
        Ok(())
    }

    /// Draws one value.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            LawKind::Constant { gamma } => gamma,
            LawKind::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            LawKind::Bernoulli { p, gamma_on } => {
                if rng.gen::<f64>() < p {
                    gamma_on
                } else {
                    0.0
                }
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for lattice index `k` under `seed`.
pub fn lattice_rng(seed: u64, k: &[i64]) -> ChaCha8Rng {
    let mut stream = 0x5EED_u64;
    for &ki in k {
        stream = splitmix(stream ^ ki as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `γ_k` for lattice index `k`: a function of `(law, seed, k)` only.
pub fn gamma_at(law: &GammaLaw, seed: u64, k: &[i64]) -> f64 {
    law.draw(&mut lattice_rng(seed, k))
}

/// Axis-aligned box `[lo, hi]^n` holding `Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaBox {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl SigmaBox {
    pub fn unit(n: usize) -> Self {
        SigmaBox { n, lo: 0.0, hi: 1.0 }
    }

    pub fn volume(&self) -> f64 {
        (self.hi - self.lo).powi(self.n as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perforation {
    pub k: Vec<i64>,
    pub gamma: f64,
    pub radius: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerforationSet {
    pub eps: f64,
    pub n: usize,
    pub entries: Vec<Perforation>,
    /// Envelope constant `M`: every radius is at most `M ε^{n/(n-2s)}`.
    pub envelope: f64,
    pub seed: u64,
}

/// Radius of a ball of capacity `ε^n γ`.
pub fn critical_radius(order: &FractionalOrder, constants: &NormalizationConstants, gamma: f64, eps: f64) -> f64 {
    (gamma / constants.ball_cap_const).powf(1.0 / order.ext_exp()) * eps.powf(order.crit_exp())
}

/// Lattice indices `k` with `εk` strictly inside `(lo, hi)` along one axis.
fn lattice_range(lo: f64, hi: f64, eps: f64) -> Vec<i64> {
    let k0 = (lo / eps).floor() as i64 - 1;
    let k1 = (hi / eps).ceil() as i64 + 1;
    (k0..=k1).filter(|&k| k as f64 * eps > lo && (k as f64 * eps) < hi).collect()
}

/// Samples `T_ε(ω)` on `domain`. `envelope` defaults to the smallest `M`
/// compatible with `γ̄`.
pub fn sample(
    law: &GammaLaw,
    eps: f64,
    domain: &SigmaBox,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    seed: u64,
    envelope: Option<f64>,
) -> Result<PerforationSet> {
    law.validate()?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::config(format!("eps must be positive, got {eps}")));
    }
    if domain.n != order.n() {
        return Err(Error::config("domain dimension differs from the order's dimension"));
    }
    let tight = (law.gamma_bar() / constants.ball_cap_const).powf(1.0 / order.ext_exp());
    let m = envelope.unwrap_or(tight);
    if tight > m * (1.0 + 1e-12) {
        let bad = constants.ball_cap_const * m.powf(order.ext_exp());
        return Err(Error::config(format!(
            "law admits gamma up to {} but envelope M = {m} allows at most {bad}",
            law.gamma_bar()
        )));
    }
    let ks = lattice_range(domain.lo, domain.hi, eps);
    let mut entries = Vec::new();
    let mut push = |k: Vec<i64>| {
        let gamma = gamma_at(law, seed, &k);
        let center = k.iter().map(|&ki| ki as f64 * eps).collect();
        let radius = critical_radius(order, constants, gamma, eps);
        entries.push(Perforation { k, gamma, radius, center });
    };
    if domain.n == 1 {
        for &k in &ks {
            push(vec![k]);
        }
    } else {
        for &k1 in &ks {
            for &k0 in &ks {
                push(vec![k0, k1]);
            }
        }
    }
    Ok(PerforationSet { eps, n: domain.n, entries, envelope: m, seed })
}

impl PerforationSet {
    pub fn min_positive_radius(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.radius).filter(|r| *r > 0.0).reduce(f64::min)
    }

    /// `Σ_k ε^n γ_k`.
    pub fn total_capacity(&self) -> f64 {
        self.entries.iter().map(|e| e.gamma).sum::<f64>() * self.eps.powi(self.n as i32)
    }

    /// Row-0 nodes inside some ball, with the obstacle value `phi(x)`.
    pub fn rasterize<F: Fn(&[f64]) -> f64>(&self, grid: &ExtensionGrid, phi: F) -> Result<Vec<(usize, f64)>> {
        if grid.n() != self.n {
            return Err(Error::config("grid dimension differs from the perforation set"));
        }
        let dx = grid.dx();
        if let Some(rmin) = self.min_positive_radius() {
            if dx > 0.5 * rmin * (1.0 + 1e-12) {
                let len = grid.spec().x_hi - grid.spec().x_lo;
                let need = (2.0 * len / rmin).ceil() as usize + 1;
                return Err(Error::config(format!(
                    "grid spacing {dx} exceeds half the smallest radius {rmin}; need nx >= {need}"
                )));
            }
        }
        let nx = grid.nx() as i64;
        let x_lo = grid.spec().x_lo;
        let mut out = Vec::new();
        for e in self.entries.iter().filter(|e| e.radius > 0.0) {
            let r = e.radius * (1.0 + 1e-12);
            let range: Vec<(i64, i64)> = e
                .center
                .iter()
                .map(|&c| {
                    let a = (((c - r - x_lo) / dx).floor() as i64).max(0);
                    let b = (((c + r - x_lo) / dx).ceil() as i64).min(nx - 1);
                    (a, b)
                })
                .collect();
            let (r1lo, r1hi) = if self.n == 2 { range[1] } else { (0, 0) };
            for i1 in r1lo..=r1hi {
                for i0 in range[0].0..=range[0].1 {
                    let axes = if self.n == 1 { vec![i0 as usize] } else { vec![i0 as usize, i1 as usize] };
                    let ix = grid.position_from_axes(&axes);
                    if grid.on_side(ix) {
                        continue;
                    }
                    let x = grid.x_of(ix);
                    let d2: f64 = x.iter().zip(&e.center).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2.sqrt() <= r {
                        out.push((ix, phi(&x)));
                    }
                }
            }
        }
        out.sort_by_key(|p| p.0);
        out.dedup_by_key(|p| p.0);
        Ok(out)
    }

    /// CSV with one row per perforation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.n == 1 {
            writeln!(w, "k,gamma,radius,center")?;
        } else {
            writeln!(w, "k0,k1,gamma,radius,center0,center1")?;
        }
        for e in &self.entries {
            let ks: Vec<String> = e.k.iter().map(|k| k.to_string()).collect();
            let cs: Vec<String> = e.center.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{},{},{}", ks.join(","), e.gamma, e.radius, cs.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn setup() -> (FractionalOrder, NormalizationConstants) {
        let o = FractionalOrder::new(1, 0.25).unwrap();
        (o, NormalizationConstants::for_order(&o))
    }

    #[test]
    fn zero_law_gives_empty_perforation() {
        let (o, c) = setup();
        let p = sample(&GammaLaw::constant(0.0), 0.125, &SigmaBox::unit(1), &o, &c, 1, None).unwrap();
        assert_eq!(p.entries.len(), 7);
        assert!(p.entries.iter().all(|e| e.radius == 0.0));
        let spec = GridSpec { n: 1, x_lo: 0.0, x_hi: 1.0, nx: 65, y_max: 0.5, ny: 8, grading: None };
        let g = ExtensionGrid::new(&spec, o.a()).unwrap();
        assert!(p.rasterize(&g, |_| 0.0).unwrap().is_empty());
    }

    #[test]
    fn critical_radius_is_eps_squared() {
        let (o, c) = setup();
        let p = sample(&GammaLaw::constant(c.ball_cap_const), 0.125, &SigmaBox::unit(1), &o, &c, 3, None).unwrap();
        for e in &p.entries {
            assert!((e.radius - 1.0 / 64.0).abs() < 1e-15);
            let cap = c.ball_cap_const * e.radius.powf(o.ext_exp());
            assert!((cap - 0.125 * e.gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_gamma_scales_radius() {
        let (o, c) = setup();
        let d = SigmaBox::unit(1);
        let p1 = sample(&GammaLaw::constant(0.3), 0.1, &d, &o, &c, 0, None).unwrap();
        let p2 = sample(&GammaLaw::constant(0.6), 0.1, &d, &o, &c, 0, None).unwrap();
        for (a, b) in p1.entries.iter().zip(&p2.entries) {
            assert!((b.radius / a.radius - 2f64.powf(1.0 / o.ext_exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_violation_is_config_error() {
        let (o, c) = setup();
        let r = sample(&GammaLaw::uniform(0.0, 2.0), 0.1, &SigmaBox::unit(1), &o, &c, 0, Some(0.5));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn law_validation() {
        assert!(GammaLaw::uniform(1.0, 0.5).validate().is_err());
        assert!(GammaLaw::constant(2.0).with_gamma_bar(1.0).validate().is_err());
        assert!(GammaLaw::bernoulli(0.5, 1.0).with_gamma_lower(0.1).validate().is_err());
        assert!(GammaLaw::uniform(0.5, 1.0).with_gamma_lower(0.5).validate().is_ok());
    }
}

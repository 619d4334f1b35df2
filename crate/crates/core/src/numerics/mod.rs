//! Fractional orders, normalization constants and closed-form reference
//! functions of the extension operator `div(y^a ∇·)`.
//!
//! Everything here is pure. The fundamental solution is
//! `h(x, y) = ν (|x|² + y²)^{-(n-2s)/2}`, normalized so that the weighted
//! normal derivative `lim y^a ∂_y h` integrates to `-1` over ℝⁿ. The constant
//! `ν` is derived from that condition rather than taken from a printed table.

pub mod quadrature;
pub mod special;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use special::{beta, gamma, sphere_area};
use std::f64::consts::PI;

pub use special::gamma_function;

/// Order `s` of `(-Δ)^s` in spatial dimension `n`, with the exponents derived
/// from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrderSpec", into = "OrderSpec")]
pub struct FractionalOrder {
    s: f64,
    n: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderSpec {
    n: usize,
    s: f64,
}

impl TryFrom<OrderSpec> for FractionalOrder {
    type Error = Error;
    fn try_from(v: OrderSpec) -> Result<Self> {
        FractionalOrder::new(v.n, v.s)
    }
}

impl From<FractionalOrder> for OrderSpec {
    fn from(o: FractionalOrder) -> Self {
        OrderSpec { n: o.n, s: o.s }
    }
}

impl FractionalOrder {
    /// Requires `0 < s < 1`, `n ≥ 1` and `n > 2s`.
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::domain(format!("order s must lie in (0,1), got {s}")));
        }
        if n == 0 {
            return Err(Error::domain("spatial dimension must be at least 1"));
        }
        if !(n as f64 > 2.0 * s) {
            return Err(Error::domain(format!(
                "need n > 2s for a decaying fundamental solution (n={n}, s={s})"
            )));
        }
        Ok(FractionalOrder { s, n })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Weight exponent `a = 1 - 2s`.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    /// Decay exponent of the fundamental solution, `n - 2s = n - 1 + a`.
    pub fn ext_exp(&self) -> f64 {
        self.n as f64 - 2.0 * self.s
    }

    /// Critical perforation exponent `n / (n - 2s)`.
    pub fn crit_exp(&self) -> f64 {
        self.n as f64 / self.ext_exp()
    }
}

/// Constants attached to an order: `ν` (fundamental solution), `μ` (strength
/// of the full-space Dirac) and `c` in `cap_s(B_r) = c r^{n-2s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationConstants {
    pub nu: f64,
    pub mu: f64,
    pub ball_cap_const: f64,
}

impl NormalizationConstants {
    pub fn for_order(order: &FractionalOrder) -> Self {
        let nu = normalization_nu(order);
        let mu = order.ext_exp() * nu * sphere_weight_integral(order);
        let ball_cap_const = ball_capacity_constant(order, nu);
        NormalizationConstants { nu, mu, ball_cap_const }
    }

    /// Sink strength `γ̃ = 2γ/μ` attached to a capacity density `γ`.
    pub fn sink_strength(&self, gamma: f64) -> f64 {
        2.0 * gamma / self.mu
    }
}

/// `ν = 1 / (ext · ω_{n-1} · B(n/2, (1+a)/2) / 2)`.
pub fn normalization_nu(order: &FractionalOrder) -> f64 {
    let n = order.n() as f64;
    let radial = 0.5 * beta(0.5 * n, 0.5 * (1.0 + order.a()));
    1.0 / (order.ext_exp() * sphere_area(order.n() - 1) * radial)
}

/// `∫_{S^n} |ω_y|^a dσ = 2 π^{n/2} Γ((1+a)/2) / Γ((n+1+a)/2)`.
pub fn sphere_weight_integral(order: &FractionalOrder) -> f64 {
    let n = order.n() as f64;
    let a = order.a();
    2.0 * PI.powf(0.5 * n) * gamma(0.5 * (1.0 + a)) / gamma(0.5 * (n + 1.0 + a))
}

/// `μ = ext · ν · ∫_{S^n}|ω_y|^a dσ`.
///
/// The flux balance of `h` over a half ball forces this to equal 2 for every
/// order; the value is still computed from its definition.
pub fn mu_constant(order: &FractionalOrder, constants: &NormalizationConstants) -> f64 {
    order.ext_exp() * constants.nu * sphere_weight_integral(order)
}

/// Ball capacity constant from the equilibrium measure of the Riesz kernel
/// `ν|x|^{-(n-2s)}` on the unit ball, whose density is `∝ (1-|x|²)^{-s}`:
/// `c = Γ(1-s) Γ(n/2) sin(πs) / (π ν Γ(n/2+1-s))`.
pub fn ball_capacity_constant(order: &FractionalOrder, nu: f64) -> f64 {
    let s = order.s();
    let hn = 0.5 * order.n() as f64;
    gamma(1.0 - s) * gamma(hn) * (PI * s).sin() / (PI * nu * gamma(hn + 1.0 - s))
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `h(x, y) = ν (|x|² + y²)^{-ext/2}`; the origin is a domain error.
pub fn fundamental_h(
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    x: &[f64],
    y: f64,
) -> Result<f64> {
    if x.len() != order.n() {
        return Err(Error::usage(format!(
            "point has {} coordinates, order has n = {}",
            x.len(),
            order.n()
        )));
    }
    if y < 0.0 {
        return Err(Error::domain(format!("height must be nonnegative, got {y}")));
    }
    let r2 = norm_sq(x) + y * y;
    if r2 == 0.0 {
        return Err(Error::domain("fundamental solution is singular at the origin"));
    }
    Ok(constants.nu * r2.powf(-0.5 * order.ext_exp()))
}

/// Radial form of [`fundamental_h`].
pub fn fundamental_h_radial(order: &FractionalOrder, constants: &NormalizationConstants, r: f64) -> f64 {
    constants.nu * r.powf(-order.ext_exp())
}

/// `∫_{B₁ⁿ(0)} (|x - x'|² + y²)^{-ext/2} dx'` for a point at distance `d` from
/// the ball center (n = 1 or 2).
pub fn unit_ball_potential(order: &FractionalOrder, d: f64, y: f64) -> Result<f64> {
    let e = order.ext_exp();
    match order.n() {
        1 => {
            // ∫_{-1-d}^{1-d} (τ² + y²)^{-e/2} dτ
            let g = |l: f64| half_line_potential(e, l, y);
            Ok(if d <= 1.0 {
                g(1.0 + d) + g(1.0 - d)
            } else {
                g(1.0 + d) - g(d - 1.0)
            })
        }
        2 => Ok(disk_potential(e, d, y)),
        n => Err(Error::domain(format!(
            "ball potential is implemented for n = 1, 2 (got n = {n})"
        ))),
    }
}

/// `∫_0^L (τ² + y²)^{-e/2} dτ` with `0 < e < 1`. The substitution
/// `τ = L v^m`, `m = 1/(1-e)` removes the endpoint singularity at `y = 0`.
fn half_line_potential(e: f64, l: f64, y: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    let m = 1.0 / (1.0 - e);
    if y == 0.0 {
        return l.powf(1.0 - e) * m;
    }
    let f = |v: f64| {
        let t = l * v.powf(m);
        l * m * v.powf(m - 1.0) * (t * t + y * y).powf(-0.5 * e)
    };
    quadrature::adaptive(0.0, 1.0, 1e-13, &f)
}

/// Polar integration about the evaluation point; the radial part is exact.
fn disk_potential(e: f64, d: f64, y: f64) -> f64 {
    let p = 1.0 - 0.5 * e;
    let prim = |rho: f64| (rho * rho + y * y).powf(p) / (2.0 * p);
    if d < 1.0 {
        let f = |theta: f64| {
            let c = theta.cos();
            let sn = theta.sin();
            let rho = -d * c + (1.0 - d * d * sn * sn).max(0.0).sqrt();
            prim(rho) - prim(0.0)
        };
        2.0 * quadrature::adaptive(0.0, PI, 1e-12, &f)
    } else {
        // the ray meets the disk for θ ∈ [π - θt, π], sin θt = 1/d
        let theta_t = (1.0 / d).asin();
        let f = |theta: f64| {
            let c = theta.cos();
            let sn = theta.sin();
            let disc = (1.0 - d * d * sn * sn).max(0.0).sqrt();
            let lo = (-d * c - disc).max(0.0);
            let hi = -d * c + disc;
            prim(hi) - prim(lo)
        };
        // θ = π - θt·(1 - w²) clusters nodes at the tangent angle
        let g = |w: f64| {
            let theta = PI - theta_t * (1.0 - w * w);
            f(theta) * 2.0 * theta_t * w
        };
        2.0 * quadrature::adaptive(0.0, 1.0, 1e-12, &g)
    }
}

/// Barrier profile `γ̃ h(x-k, y) - α ∫_{B₁(k)} ν (|x-x'|² + y²)^{-ext/2} dx'`,
/// with `γ̃ = 2γ/μ`.
pub fn barrier_profile(
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    alpha: f64,
    gamma: f64,
    center: &[f64],
    x: &[f64],
    y: f64,
) -> Result<f64> {
    if center.len() != order.n() || x.len() != order.n() {
        return Err(Error::usage("point/center dimension does not match the order"));
    }
    let rel: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    let h = fundamental_h(order, constants, &rel, y)?;
    let tilde = constants.sink_strength(gamma);
    if alpha == 0.0 {
        return Ok(tilde * h);
    }
    let d = norm_sq(&rel).sqrt();
    Ok(tilde * h - alpha * constants.nu * unit_ball_potential(order, d, y)?)
}

/// Radius at which `γ̃ h` equals one: `r = (γ̃ ν)^{1/ext}`.
pub fn unit_level_radius(order: &FractionalOrder, constants: &NormalizationConstants, gamma: f64) -> f64 {
    (constants.sink_strength(gamma) * constants.nu).powf(1.0 / order.ext_exp())
}

/// `∫_{ℝⁿ} y^a ∂_y h(x, y) dx` at height `y`, by radial quadrature up to
/// `r_max` plus an asymptotic tail correction. Equals `-1` for every `y > 0`.
pub fn boundary_flux_integral(
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    y: f64,
    r_max: f64,
) -> Result<f64> {
    if !(y > 0.0) || !(r_max > 2.0 * y) {
        return Err(Error::domain("need y > 0 and r_max > 2y"));
    }
    let n = order.n();
    let a = order.a();
    let e = order.ext_exp();
    let p = 0.5 * (n as f64 + 1.0 + a);
    let nf = n as f64;
    let pref = -e * constants.nu * y.powf(1.0 + a) * sphere_area(n - 1);
    let breaks = quadrature::geometric_breaks(y, r_max);
    let body = quadrature::composite(&breaks, |rho| rho.powf(nf - 1.0) * (rho * rho + y * y).powf(-p));
    // ∫_R^∞ ρ^{n-1} ρ^{-2p} (1 + y²/ρ²)^{-p} dρ, binomial series in (y/R)²
    let q = (y / r_max).powi(2);
    let mut tail = 0.0;
    let mut coef = 1.0;
    for k in 0..60 {
        let kf = k as f64;
        let expo = 2.0 * p + 2.0 * kf - nf;
        let term = coef * r_max.powf(-expo) / expo * q.powi(k);
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        coef *= -(p + kf) / (kf + 1.0);
    }
    Ok(pref * (body + tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(n: usize, s: f64) -> (FractionalOrder, NormalizationConstants) {
        let o = FractionalOrder::new(n, s).unwrap();
        let c = NormalizationConstants::for_order(&o);
        (o, c)
    }

    #[test]
    fn order_validation() {
        assert!(FractionalOrder::new(1, 0.5).is_err());
        assert!(FractionalOrder::new(1, 0.0).is_err());
        assert!(FractionalOrder::new(2, 1.0).is_err());
        assert!(FractionalOrder::new(0, 0.2).is_err());
        let o = FractionalOrder::new(1, 0.25).unwrap();
        assert_eq!(o.a(), 0.5);
        assert_eq!(o.ext_exp(), 0.5);
        assert_eq!(o.crit_exp(), 2.0);
    }

    #[test]
    fn nu_half_space_kernel() {
        let (_, c) = consts(2, 0.5);
        assert!((c.nu - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((c.mu - 2.0).abs() < 1e-12);
        // disk capacity in the half space: 4r
        assert!((c.ball_cap_const - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mu_is_two_for_all_orders() {
        for (n, s) in [(1, 0.1), (1, 0.25), (1, 0.4), (2, 0.3), (2, 0.75), (3, 0.9)] {
            let (o, c) = consts(n, s);
            assert!((mu_constant(&o, &c) - 2.0).abs() < 1e-11, "n={n} s={s}");
        }
    }

    #[test]
    fn h_power_law_and_symmetry() {
        let (o, c) = consts(2, 0.3);
        let h1 = fundamental_h(&o, &c, &[0.6, 0.0], 0.8).unwrap();
        let h2 = fundamental_h(&o, &c, &[1.2, 0.0], 1.6).unwrap();
        assert!((h1 / h2 - 2f64.powf(o.ext_exp())).abs() < 1e-12);
        let ha = fundamental_h(&o, &c, &[0.7, 0.0], 0.2).unwrap();
        let hb = fundamental_h(&o, &c, &[0.0, 0.7], 0.2).unwrap();
        assert_eq!(ha, hb);
        assert!(fundamental_h(&o, &c, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn barrier_reduces_without_alpha() {
        let (o, c) = consts(1, 0.25);
        let b = barrier_profile(&o, &c, 0.0, 1.3, &[2.0], &[2.4], 0.1).unwrap();
        let h = fundamental_h(&o, &c, &[0.4], 0.1).unwrap();
        assert!((b - c.sink_strength(1.3) * h).abs() < 1e-15);
        assert!(barrier_profile(&o, &c, 0.5, 1.0, &[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn unit_level_radius_hits_one() {
        let (o, c) = consts(1, 0.25);
        let r = unit_level_radius(&o, &c, 0.8);
        let v = barrier_profile(&o, &c, 0.0, 0.8, &[0.0], &[r * 0.6], r * 0.8).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flux_integral_is_minus_one() {
        for (n, s) in [(1, 0.25), (1, 0.4), (2, 0.5), (2, 0.2)] {
            let (o, c) = consts(n, s);
            for y in [1e-3, 1e-2, 1e-1] {
                let v = boundary_flux_integral(&o, &c, y, 50.0).unwrap();
                assert!((v + 1.0).abs() < 1e-8, "n={n} s={s} y={y}: {v}");
            }
        }
    }
}

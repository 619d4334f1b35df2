//! Gauss–Legendre rules with an adaptive bisection fallback.

use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// The shared 64-point rule.
pub fn gl64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// Default absolute/relative tolerance of [`adaptive`].
pub const ADAPTIVE_TOL: f64 = 1e-10;

/// Integrates `f` over `[lo, hi]` with the 64-point rule, bisecting panels
/// until a panel and its two halves agree to `tol` (relative to the running
/// magnitude, with an absolute floor of `tol`).
pub fn adaptive<F: Fn(f64) -> f64>(lo: f64, hi: f64, tol: f64, f: &F) -> f64 {
    let rule = gl64();
    let whole = rule.integrate(lo, hi, f);
    adaptive_rec(rule, lo, hi, whole, tol, f, 0)
}

fn adaptive_rec<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    f: &F,
    depth: usize,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let left = rule.integrate(lo, mid, f);
    let right = rule.integrate(mid, hi, f);
    let refined = left + right;
    let scale = refined.abs().max(1.0);
    if (refined - whole).abs() <= tol * scale || depth >= 48 {
        return refined;
    }
    adaptive_rec(rule, lo, mid, left, 0.5 * tol, f, depth + 1)
        + adaptive_rec(rule, mid, hi, right, 0.5 * tol, f, depth + 1)
}

/// Composite 64-point rule over the panels `breaks[k]..breaks[k+1]`.
pub fn composite<F: FnMut(f64) -> f64>(breaks: &[f64], mut f: F) -> f64 {
    let rule = gl64();
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Geometric panel breaks `0, h, 2h, 4h, ... , hi` used for integrands that
/// vary on the scale `h` near zero and slowly further out.
pub fn geometric_breaks(h: f64, hi: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut b = h.min(hi);
    while b < hi {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(hi);
    breaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(8);
        // degree 15 is the highest integrated exactly
        let v = r.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive(0.0, 1.0, 1e-12, &|x: f64| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-7, "{v}");
    }
}

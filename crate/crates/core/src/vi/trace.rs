//! Projected SOR on the boundary trace.
//!
//! For data that is constant on `Γ`, the minimizer is discrete-harmonic
//! off row 0, so the energy reduces to `½ wᵀ S w` in the row-0 unknowns `w`,
//! with `S` the discrete Dirichlet-to-Neumann map. `S` is diagonalized by
//! sine modes in `x`: each mode sees a tridiagonal column problem whose Schur
//! complement onto row 0 is a scalar `σ_m`. Assembling `S` densely turns the
//! bulk relaxation into a much smaller, better conditioned trace relaxation.

use super::dst::Dst1;
use super::{relaxed_update, SolveOptions, ViProblem};
use crate::error::{Error, Result};
use crate::grid::ExtensionGrid;
use std::f64::consts::PI;
use std::sync::Arc;

/// Dense discrete Dirichlet-to-Neumann map of a grid, plus the modal
/// profiles that extend a trace into the slab.
#[derive(Debug)]
pub struct TraceOperator {
    n: usize,
    size: usize,
    ny: usize,
    s: Vec<f64>,
    sigma: Vec<f64>,
    /// `profile[j * size + m]`: harmonic extension of mode `m` at row `j`.
    profile: Vec<f64>,
    dst: Dst1,
}

impl TraceOperator {
    pub fn build(grid: &ExtensionGrid) -> Self {
        let n = grid.n();
        let nint = grid.nx() - 2;
        let nm = nint + 1;
        let size = nint.pow(n as u32);
        let ny = grid.ny();
        let dx = grid.dx();
        let wx: Vec<f64> = grid.mass_y().iter().map(|m| m * dx.powi(n as i32 - 2)).collect();
        let wy: Vec<f64> = grid.hy_inv().iter().map(|h| h * dx.powi(n as i32)).collect();
        let lam1: Vec<f64> = (1..=nint).map(|m| 2.0 - 2.0 * (PI * m as f64 / nm as f64).cos()).collect();

        let mut sigma = vec![0.0; size];
        let mut profile = vec![0.0; (ny + 1) * size];
        let mut e = vec![0.0; ny];
        for m in 0..size {
            let lam = if n == 1 { lam1[m] } else { lam1[m % nint] + lam1[m / nint] };
            for j in (0..ny).rev() {
                let mut t = lam * wx[j] + wy[j];
                if j > 0 {
                    t += wy[j - 1];
                }
                if j + 1 < ny {
                    t -= wy[j] * wy[j] / e[j + 1];
                }
                e[j] = t;
            }
            sigma[m] = e[0];
            let mut p = 1.0;
            profile[m] = 1.0;
            for j in 0..ny - 1 {
                p *= wy[j] / e[j + 1];
                profile[(j + 1) * size + m] = p;
            }
        }

        let cos_table: Vec<f64> = (0..2 * nm).map(|k| (PI * k as f64 / nm as f64).cos()).collect();
        let cosv = |m: usize, d: usize| cos_table[(m * d) % (2 * nm)];
        let nd = 2 * nint + 1;
        let mut s = vec![0.0; size * size];
        if n == 1 {
            let c: Vec<f64> = (0..nd)
                .map(|d| (1..=nint).map(|m| sigma[m - 1] * cosv(m, d)).sum::<f64>() / nm as f64)
                .collect();
            for i in 1..=nint {
                for k in 1..=nint {
                    s[(i - 1) * size + (k - 1)] = c[i.abs_diff(k)] - c[i + k];
                }
            }
        } else {
            // partial[d0 * nint + (m1-1)] = Σ_{m0} σ(m0,m1) cos(π m0 d0 / nm)
            let mut partial = vec![0.0; nd * nint];
            for d0 in 0..nd {
                for m1 in 0..nint {
                    partial[d0 * nint + m1] =
                        (1..=nint).map(|m0| sigma[m1 * nint + m0 - 1] * cosv(m0, d0)).sum();
                }
            }
            let scale = 1.0 / (nm * nm) as f64;
            let mut c2 = vec![0.0; nd * nd];
            for d0 in 0..nd {
                for d1 in 0..nd {
                    c2[d0 * nd + d1] =
                        (1..=nint).map(|m1| partial[d0 * nint + m1 - 1] * cosv(m1, d1)).sum::<f64>() * scale;
                }
            }
            let c = |a: usize, b: usize| c2[a * nd + b];
            for i1 in 1..=nint {
                for i0 in 1..=nint {
                    let row = (i0 - 1) + nint * (i1 - 1);
                    for k1 in 1..=nint {
                        for k0 in 1..=nint {
                            let col = (k0 - 1) + nint * (k1 - 1);
                            let (m0, p0) = (i0.abs_diff(k0), i0 + k0);
                            let (m1, p1) = (i1.abs_diff(k1), i1 + k1);
                            s[row * size + col] = c(m0, m1) - c(p0, m1) - c(m0, p1) + c(p0, p1);
                        }
                    }
                }
            }
        }
        TraceOperator { n, size, ny, s, sigma, profile, dst: Dst1::new(nint) }
    }

    /// Number of trace unknowns.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry `S_ik`.
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.s[i * self.size + k]
    }

    /// Modal eigenvalues of `S`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.sigma
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.s.chunks(self.size).map(|row| dot(row, w)).collect()
    }

    fn transform(&self, x: &mut [f64]) {
        let mut buf = Vec::new();
        if self.n == 1 {
            self.dst.apply(x, &mut buf);
        } else {
            let mut line = Vec::new();
            self.dst.apply_2d(x, &mut buf, &mut line);
        }
    }

    /// Discrete-harmonic extension of the trace `w` (values on `Σ`, zero on
    /// `Γ`), shifted by the constant `g0`.
    pub fn extend(&self, grid: &ExtensionGrid, w: &[f64], g0: f64) -> Vec<f64> {
        let mut u = vec![g0; grid.node_count()];
        let mut hat = w.to_vec();
        self.transform(&mut hat);
        let sigma_nodes = grid.sigma_nodes();
        let mut row = vec![0.0; self.size];
        for j in 0..self.ny {
            if j == 0 {
                row.copy_from_slice(w);
            } else {
                let prof = &self.profile[j * self.size..(j + 1) * self.size];
                for m in 0..self.size {
                    row[m] = hat[m] * prof[m];
                }
                self.transform(&mut row);
            }
            for (k, &ix) in sigma_nodes.iter().enumerate() {
                u[grid.index(ix, j)] = g0 + row[k];
            }
        }
        u
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn operator(grid: &ExtensionGrid) -> Arc<TraceOperator> {
    Arc::clone(grid.trace_cache().get_or_init(|| Arc::new(TraceOperator::build(grid))))
}

pub(super) fn solve(
    problem: &ViProblem,
    g0: f64,
    u0: &[f64],
    diag: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    let grid = problem.grid.as_ref();
    let op = operator(grid);
    let nodes = grid.sigma_nodes();
    let size = nodes.len();
    let mut w: Vec<f64> = nodes.iter().map(|&i| u0[i] - g0).collect();
    let fixed: Vec<bool> = nodes.iter().map(|&i| problem.dirichlet[i].is_some()).collect();
    let lin: Vec<f64> = nodes.iter().map(|&i| problem.linear[i] - problem.sink[i]).collect();
    let lower: Vec<Option<f64>> = nodes.iter().map(|&i| problem.lower[i].map(|p| p - g0)).collect();
    let quad: Vec<Option<(f64, f64)>> =
        nodes.iter().map(|&i| problem.quadratic[i].map(|(b, p)| (b, p - g0))).collect();
    let dgrid: Vec<f64> = nodes.iter().map(|&i| diag[i]).collect();
    let free: Vec<usize> = (0..size).filter(|&k| !fixed[k]).collect();

    let objective = |w: &[f64], sw: &[f64]| {
        let mut o = 0.5 * dot(w, sw) + dot(&lin, w);
        for k in 0..size {
            if let Some((beta, psi)) = quad[k] {
                let m = (psi - w[k]).max(0.0);
                o += 0.5 * beta * m * m;
            }
        }
        o
    };
    let kkt = |w: &[f64], sw: &[f64]| {
        let mut worst = 0.0f64;
        for &k in &free {
            let mut r = sw[k] + lin[k];
            if let Some((beta, psi)) = quad[k] {
                r -= beta * (psi - w[k]).max(0.0);
            }
            let rh = r / dgrid[k];
            let v = match lower[k] {
                Some(phi) => (w[k] - phi).min(rh).abs(),
                None => rh.abs(),
            };
            worst = worst.max(v);
        }
        worst
    };

    let mut sw = op.apply(&w);
    let mut omega = opts.omega;
    let mut obj = objective(&w, &sw);
    let mut res = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        for &k in &free {
            let col = &op.s[k * size..(k + 1) * size];
            let skk = col[k];
            let b = skk * w[k] - sw[k] - lin[k];
            let next = relaxed_update(w[k], skk, b, quad[k], lower[k], omega);
            let delta = next - w[k];
            if delta != 0.0 {
                w[k] = next;
                for (s, c) in sw.iter_mut().zip(col) {
                    *s += delta * c;
                }
            }
        }
        if sweep % 64 == 0 {
            sw = op.apply(&w);
        }
        let next = objective(&w, &sw);
        let slack = 1e-12 * (1.0 + obj.abs());
        if omega == 1.0 {
            debug_assert!(next <= obj + slack, "objective rose from {obj} to {next} at omega = 1");
        } else if next > obj + slack {
            omega = 1.0;
        }
        obj = next;
        res = kkt(&w, &sw);
        if res < opts.tol {
            let fresh = op.apply(&w);
            res = kkt(&w, &fresh);
            sw = fresh;
            if res < opts.tol {
                return Ok((op.extend(grid, &w, g0), sweep, omega));
            }
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_sweeps, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid(n: usize, nx: usize, ny: usize, a: f64) -> Arc<ExtensionGrid> {
        let spec = GridSpec { n, x_lo: -1.0, x_hi: 1.0, nx, y_max: 1.0, ny, grading: None };
        ExtensionGrid::new(&spec, a).unwrap()
    }

    /// `S` must reproduce `-(A u)` on row 0 for the extension it builds.
    fn check_schur(g: &Arc<ExtensionGrid>) {
        let op = TraceOperator::build(g);
        let w: Vec<f64> = (0..op.size()).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.4).collect();
        let u = op.extend(g, &w, 0.0);
        let au = g.apply(&u);
        let sw = op.apply(&w);
        let nodes = g.sigma_nodes();
        for (k, &i) in nodes.iter().enumerate() {
            assert!((au[i] - sw[k]).abs() < 1e-12 * (1.0 + sw[k].abs()), "{} vs {}", au[i], sw[k]);
        }
        let d = g.diagonal();
        for p in 0..g.node_count() {
            let (ix, j) = g.split(p);
            if j > 0 && !g.is_gamma(p) {
                assert!(au[p].abs() / d[p] < 1e-12, "interior residual at ({ix},{j})");
            }
        }
        for i in 0..op.size() {
            for k in 0..op.size() {
                assert!((op.entry(i, k) - op.entry(k, i)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn schur_complement_one_dimension() {
        check_schur(&grid(1, 17, 9, 0.5));
        check_schur(&grid(1, 10, 5, -0.3));
    }

    #[test]
    fn schur_complement_two_dimensions() {
        check_schur(&grid(2, 7, 6, 0.0));
        check_schur(&grid(2, 6, 4, 0.4));
    }
}

#![allow(dead_code)]

use fracperf::grid::{ExtensionGrid, GridSpec};
use fracperf::vi::ViProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub fn grid(n: usize, nx: usize, ny: usize, a: f64) -> Arc<ExtensionGrid> {
    let spec = GridSpec { n, x_lo: 0.0, x_hi: 1.0, nx, y_max: 0.5, ny, grading: None };
    ExtensionGrid::new(&spec, a).unwrap()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap()).unwrap();
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

/// Stiffness matrix assembled edge by edge.
pub fn stiffness(grid: &ExtensionGrid) -> Vec<Vec<f64>> {
    let n = grid.node_count();
    let mut a = vec![vec![0.0; n]; n];
    grid.for_each_edge(|p, q, w| {
        a[p][p] += w;
        a[q][q] += w;
        a[p][q] -= w;
        a[q][p] -= w;
    });
    a
}

/// Exact minimizer by enumerating which lower bounds are active and which
/// penalties are engaged. Returns `None` when no pattern passes the checks.
pub fn active_set_oracle(p: &ViProblem) -> Option<Vec<f64>> {
    let grid = p.grid();
    let n = grid.node_count();
    let a = stiffness(grid);
    let dir = p.dirichlet();
    // per-node data is stored for row 0 only
    let lower: Vec<Option<f64>> = (0..n).map(|i| p.lower_bounds().get(i).copied().flatten()).collect();
    let quad: Vec<Option<(f64, f64)>> = (0..n).map(|i| p.quadratic().get(i).copied().flatten()).collect();
    let lin: Vec<f64> = (0..n)
        .map(|i| p.linear().get(i).copied().unwrap_or(0.0) - p.sinks().get(i).copied().unwrap_or(0.0))
        .collect();
    let free: Vec<usize> = (0..n).filter(|&i| dir[i].is_none()).collect();
    let lows: Vec<usize> = free.iter().copied().filter(|&i| lower[i].is_some()).collect();
    let quads: Vec<usize> = free.iter().copied().filter(|&i| quad[i].is_some()).collect();
    let bits = lows.len() + quads.len();
    assert!(bits <= 16, "too many switches for enumeration");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << bits) {
        let pinned: Vec<bool> = (0..lows.len()).map(|k| mask & (1 << k) != 0).collect();
        let engaged: Vec<bool> = (0..quads.len()).map(|k| mask & (1 << (lows.len() + k)) != 0).collect();
        let mut u = vec![0.0; n];
        for i in 0..n {
            if let Some(g) = dir[i] {
                u[i] = g;
            }
        }
        let mut fixed = vec![false; n];
        for (k, &i) in lows.iter().enumerate() {
            if pinned[k] {
                u[i] = lower[i].unwrap();
                fixed[i] = true;
            }
        }
        let unknowns: Vec<usize> = free.iter().copied().filter(|&i| !fixed[i]).collect();
        let pos = |i: usize| unknowns.iter().position(|&j| j == i);
        let m = unknowns.len();
        let mut mat = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for (r, &i) in unknowns.iter().enumerate() {
            rhs[r] = -lin[i];
            for j in 0..n {
                if a[i][j] == 0.0 {
                    continue;
                }
                match pos(j) {
                    Some(c) => mat[r][c] += a[i][j],
                    None => rhs[r] -= a[i][j] * u[j],
                }
            }
            if let Some(k) = quads.iter().position(|&q| q == i) {
                if engaged[k] {
                    let (beta, psi) = quad[i].unwrap();
                    mat[r][r] += beta;
                    rhs[r] += beta * psi;
                }
            }
        }
        let x = dense_solve(mat, rhs);
        for (r, &i) in unknowns.iter().enumerate() {
            u[i] = x[r];
        }
        let tol = 1e-11;
        let mut ok = true;
        for (k, &i) in quads.iter().enumerate() {
            let psi = quad[i].unwrap().1;
            ok &= if engaged[k] { u[i] <= psi + tol } else { u[i] >= psi - tol };
        }
        let grad = p.residual(&u);
        for (k, &i) in lows.iter().enumerate() {
            ok &= if pinned[k] { grad[i] >= -tol } else { u[i] >= lower[i].unwrap() - tol };
        }
        if ok {
            let obj = p.objective(&u);
            if best.as_ref().is_none_or(|b| obj < b.0) {
                best = Some((obj, u));
            }
        }
    }
    best.map(|b| b.1)
}

/// Random instance with at most 12 free nodes. Row-0 interior nodes get a
/// lower bound, a penalty, or nothing; `linear` and `sink` data are random.
pub fn random_instance(seed: u64) -> ViProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = [-0.5, 0.0, 0.5][rng.gen_range(0..3)];
    let g = if rng.gen_bool(0.5) { grid(1, 5, 4, a) } else { grid(2, 4, 3, a) };
    let gamma: f64 = rng.gen_range(-0.5..0.5);
    let mut p = ViProblem::new(&g).with_gamma_value(gamma);
    for i in g.sigma_nodes() {
        match rng.gen_range(0..3) {
            0 => p.set_lower_bound(i, rng.gen_range(-1.0..1.0)).unwrap(),
            1 => p.set_quadratic(i, rng.gen_range(0.01..5.0), rng.gen_range(-1.0..1.0)).unwrap(),
            _ => {}
        }
    }
    for i in g.sigma_nodes() {
        if rng.gen_bool(0.3) {
            p.set_linear(i, rng.gen_range(-0.2..0.2)).unwrap();
        }
        if rng.gen_bool(0.2) {
            p.add_sink(i, rng.gen_range(0.0..0.3)).unwrap();
        }
    }
    p
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

//! Projected SOR over every free grid node.

use super::{relaxed_update, Ordering, SolveOptions, ViProblem};
use crate::error::{Error, Result};
use rayon::prelude::*;

fn local_rhs(problem: &ViProblem, u: &[f64], p: usize, buf: &mut Vec<(usize, f64)>) -> f64 {
    problem.grid.neighbors(p, buf);
    let mut b: f64 = buf.iter().map(|&(q, w)| w * u[q]).sum();
    if p < problem.linear.len() {
        b += problem.sink[p] - problem.linear[p];
    }
    b
}

fn update(problem: &ViProblem, u: &[f64], p: usize, d: f64, omega: f64, buf: &mut Vec<(usize, f64)>) -> f64 {
    let b = local_rhs(problem, u, p, buf);
    let (quad, lower) = if p < problem.lower.len() {
        (problem.quadratic[p], problem.lower[p])
    } else {
        (None, None)
    };
    relaxed_update(u[p], d, b, quad, lower, omega)
}

fn colour(problem: &ViProblem, p: usize) -> usize {
    let g = &problem.grid;
    let (ix, j) = g.split(p);
    let ax = g.axis_indices(ix);
    (ax[0] + ax[1] + j) % 2
}

pub(super) fn solve(
    problem: &ViProblem,
    mut u: Vec<f64>,
    diag: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, usize, f64)> {
    let free: Vec<usize> = (0..u.len()).filter(|&p| problem.dirichlet[p].is_none()).collect();
    let colours: [Vec<usize>; 2] = {
        let mut c = [Vec::new(), Vec::new()];
        for &p in &free {
            c[colour(problem, p)].push(p);
        }
        c
    };
    let check_every = if u.len() < 20_000 { 1 } else { 5 };
    let mut omega = opts.omega;
    let mut obj = problem.objective(&u);
    let mut kkt = f64::INFINITY;
    let mut buf = Vec::with_capacity(6);
    for sweep in 1..=opts.max_sweeps {
        match opts.ordering {
            Ordering::Lexicographic => {
                for &p in &free {
                    u[p] = update(problem, &u, p, diag[p], omega, &mut buf);
                }
            }
            Ordering::RedBlack => {
                for nodes in &colours {
                    let new: Vec<f64> = nodes
                        .par_iter()
                        .map_init(
                            || Vec::with_capacity(6),
                            |buf, &p| update(problem, &u, p, diag[p], omega, buf),
                        )
                        .collect();
                    for (&p, v) in nodes.iter().zip(new) {
                        u[p] = v;
                    }
                }
            }
        }
        if sweep % check_every == 0 || sweep == opts.max_sweeps {
            let next = problem.objective(&u);
            let slack = 1e-12 * (1.0 + obj.abs());
            if omega == 1.0 {
                debug_assert!(next <= obj + slack, "objective rose from {obj} to {next} at omega = 1");
            } else if next > obj + slack {
                omega = 1.0;
            }
            obj = next;
            kkt = problem.kkt_measure(&u, diag);
            if kkt < opts.tol {
                return Ok((u, sweep, omega));
            }
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_sweeps, residual: kkt })
}

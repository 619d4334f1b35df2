//! The cell obstacle problem and the effective coefficient `α₀`.
//!
//! On the window `[0, T]ⁿ × (0, Y_T]` the smallest supersolution is the
//! minimizer of `½ E(v) + α Σ |dual_i| v_i − Σ_k γ̃_k v(k)` over
//! `{v ≥ 0 on Σ, v = 0 on Γ}`, with one sink per unit lattice cell at its
//! centre. `ℓ̄(α)` is the fraction of `Σ` where `v = 0`, and
//! `α₀ = sup {α : ℓ̄(α) = 0}` is located by bracketing and bisection on the
//! threshold `ℓ̄ > θ`.

use crate::error::{Error, Result};
use crate::grid::{ExtensionGrid, GridSpec};
use crate::numerics::{FractionalOrder, NormalizationConstants};
use crate::perforations::{gamma_at, GammaLaw};
use crate::vi::{solve, ComplementaritySolution, SolveOptions, ViProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Discretization of a cell window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    /// Boundary nodes per unit lattice cell and axis (even, at least 8).
    #[serde(default = "default_nodes_per_cell")]
    pub nodes_per_cell: usize,
    /// Slab height as a multiple of `T`.
    #[serde(default = "default_height_factor")]
    pub height_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
    #[serde(default = "one")]
    pub ny_factor: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_nodes_per_cell() -> usize {
    16
}
fn default_height_factor() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-9
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            nodes_per_cell: default_nodes_per_cell(),
            height_factor: default_height_factor(),
            grading: None,
            ny_factor: 1.0,
            tol: default_tol(),
        }
    }
}

impl CellParams {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_cell < 8 || self.nodes_per_cell % 2 != 0 {
            return Err(Error::config(format!(
                "nodes_per_cell must be even and at least 8, got {}",
                self.nodes_per_cell
            )));
        }
        if !(self.height_factor > 0.0) || !(self.ny_factor > 0.0) || !(self.tol > 0.0) {
            return Err(Error::config("height_factor, ny_factor and tol must be positive"));
        }
        Ok(())
    }

    /// Grid of the window `[0, T]ⁿ`.
    pub fn grid(&self, order: &FractionalOrder, t: usize) -> Result<Arc<ExtensionGrid>> {
        self.validate()?;
        if t < 2 {
            return Err(Error::config(format!("window size T must be at least 2, got {t}")));
        }
        let nx = t * self.nodes_per_cell + 1;
        let dx = 1.0 / self.nodes_per_cell as f64;
        let y_max = self.height_factor * t as f64;
        let q = self.grading.unwrap_or_else(|| GridSpec::default_grading(order.a()));
        let ny = (GridSpec::matched_ny(y_max, dx, q) as f64 * self.ny_factor).ceil() as usize;
        let spec = GridSpec { n: order.n(), x_lo: 0.0, x_hi: t as f64, nx, y_max, ny, grading: Some(q) };
        ExtensionGrid::new(&spec, order.a())
    }
}

/// One cell solve.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub alpha: f64,
    pub t: usize,
    pub seed: u64,
    pub contact_fraction: f64,
    pub contact_count: usize,
    pub solution: ComplementaritySolution,
}

/// Lattice indices of the window, lexicographic with the first axis fastest.
pub fn window_lattice(n: usize, t: usize) -> Vec<Vec<i64>> {
    let t = t as i64;
    if n == 1 {
        (0..t).map(|k| vec![k]).collect()
    } else {
        (0..t).flat_map(|k1| (0..t).map(move |k0| vec![k0, k1])).collect()
    }
}

/// Builds the cell VI for `(α, T, seed)`.
pub fn cell_problem(
    alpha: f64,
    t: usize,
    law: &GammaLaw,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    params: &CellParams,
    seed: u64,
) -> Result<ViProblem> {
    law.validate()?;
    if !alpha.is_finite() {
        return Err(Error::config("alpha must be finite"));
    }
    let grid = params.grid(order, t)?;
    let mut problem = ViProblem::new(&grid);
    for i in grid.sigma_nodes() {
        problem.set_lower_bound(i, 0.0)?;
        problem.set_linear(i, alpha * grid.x_measure(i))?;
    }
    let m = params.nodes_per_cell;
    for k in window_lattice(order.n(), t) {
        let gamma = gamma_at(law, seed, &k);
        let axes: Vec<usize> = k.iter().map(|&ki| ki as usize * m + m / 2).collect();
        let node = grid.position_from_axes(&axes);
        problem.add_sink(node, constants.sink_strength(gamma))?;
    }
    Ok(problem)
}

/// Solves the cell problem and measures its contact fraction.
pub fn solve_cell(
    alpha: f64,
    t: usize,
    law: &GammaLaw,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    params: &CellParams,
    seed: u64,
) -> Result<CellRun> {
    let problem = cell_problem(alpha, t, law, order, constants, params, seed)?;
    let solution = solve(&problem, &SolveOptions::default().with_tol(params.tol))?;
    let total = problem.grid().sigma_nodes().len();
    let contact_count = solution.contact_nodes.len();
    Ok(CellRun {
        alpha,
        t,
        seed,
        contact_fraction: contact_count as f64 / total as f64,
        contact_count,
        solution,
    })
}

/// Monte-Carlo estimate of `ℓ̄(α)` at window size `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllSample {
    pub alpha: f64,
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    /// `(seed, contact_fraction)` per run.
    pub runs: Vec<(u64, f64)>,
}

pub fn estimate_ell(
    alpha: f64,
    t: usize,
    law: &GammaLaw,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    params: &CellParams,
    seeds: &[u64],
) -> Result<EllSample> {
    if seeds.len() < 2 {
        return Err(Error::config("estimating the contact density needs at least 2 seeds"));
    }
    let runs: Vec<(u64, f64)> = seeds
        .par_iter()
        .map(|&seed| solve_cell(alpha, t, law, order, constants, params, seed).map(|r| (seed, r.contact_fraction)))
        .collect::<Result<_>>()?;
    let count = runs.len();
    let mean = runs.iter().map(|r| r.1).sum::<f64>() / count as f64;
    let var = runs.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    Ok(EllSample { alpha, t, mean, stderr: (var / count as f64).sqrt(), count, runs })
}

/// Search settings of [`estimate_alpha0`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSearch {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_tol_alpha")]
    pub tol_alpha: f64,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
}

fn default_theta() -> f64 {
    0.01
}
fn default_tol_alpha() -> f64 {
    0.02
}
fn default_alpha_max() -> f64 {
    1024.0
}

impl Default for AlphaSearch {
    fn default() -> Self {
        AlphaSearch { theta: default_theta(), tol_alpha: default_tol_alpha(), alpha_max: default_alpha_max() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEstimate {
    /// Every evaluated `α`, in evaluation order.
    pub samples: Vec<EllSample>,
    pub bracket: (f64, f64),
    pub alpha0: f64,
    pub theta: f64,
    pub tol_alpha: f64,
    /// Flux-balance value `E[γ̃]`, reported alongside.
    pub flux_balance: f64,
}

impl AlphaEstimate {
    /// Half-width of the bracket, the resolution of `alpha0`.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.bracket.1 - self.bracket.0)
    }

    /// One row per `(α, seed)` run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,T,seed,contact_fraction")?;
        for s in &self.samples {
            for (seed, f) in &s.runs {
                writeln!(w, "{},{},{},{}", s.alpha, s.t, seed, f)?;
            }
        }
        Ok(())
    }
}

/// `E[γ] · 2/μ`.
pub fn flux_balance_alpha(law: &GammaLaw, constants: &NormalizationConstants) -> f64 {
    constants.sink_strength(law.mean())
}

/// Locates `α₀` by doubling from `α = 1` until `ℓ̄ > θ`, then bisecting
/// until the bracket is narrower than `tol_alpha`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_alpha0(
    law: &GammaLaw,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    params: &CellParams,
    t: usize,
    seeds: &[u64],
    search: &AlphaSearch,
) -> Result<AlphaEstimate> {
    if !(search.theta > 0.0 && search.theta < 1.0) || !(search.tol_alpha > 0.0) || !(search.alpha_max >= 1.0) {
        return Err(Error::config("need 0 < theta < 1, tol_alpha > 0 and alpha_max >= 1"));
    }
    let mut samples = Vec::new();
    let eval = |alpha: f64, samples: &mut Vec<EllSample>| -> Result<bool> {
        let s = estimate_ell(alpha, t, law, order, constants, params, seeds)?;
        let above = s.mean > search.theta;
        samples.push(s);
        Ok(above)
    };

    let mut lo = None;
    let mut hi = 1.0;
    while !eval(hi, &mut samples)? {
        lo = Some(hi);
        hi *= 2.0;
        if hi > search.alpha_max {
            let log: Vec<String> = samples.iter().map(|s| format!("alpha={} mean={}", s.alpha, s.mean)).collect();
            return Err(Error::Search(format!(
                "contact density never exceeded theta = {} up to alpha = {}: {}",
                search.theta,
                search.alpha_max,
                log.join("; ")
            )));
        }
    }
    let mut lo = match lo {
        Some(lo) => lo,
        None => {
            if eval(0.0, &mut samples)? {
                hi = 0.0;
                eval(-1.0, &mut samples)?;
                -1.0
            } else {
                0.0
            }
        }
    };
    while hi - lo >= search.tol_alpha {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut samples)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    // α₀ ≥ 0 always; keep the clamp only when it stays inside the bracket
    let alpha0 = if mid < 0.0 && hi >= 0.0 { 0.0 } else { mid };
    Ok(AlphaEstimate {
        samples,
        bracket: (lo, hi),
        alpha0,
        theta: search.theta,
        tol_alpha: search.tol_alpha,
        flux_balance: flux_balance_alpha(law, constants),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (FractionalOrder, NormalizationConstants, CellParams) {
        let o = FractionalOrder::new(1, 0.25).unwrap();
        let p = CellParams { nodes_per_cell: 8, ..CellParams::default() };
        (o, NormalizationConstants::for_order(&o), p)
    }

    #[test]
    fn negative_alpha_has_no_contact() {
        let (o, c, p) = setup();
        let r = solve_cell(-0.1, 4, &GammaLaw::constant(1.0), &o, &c, &p, 0).unwrap();
        assert_eq!(r.contact_count, 0);
    }

    #[test]
    fn no_sinks_means_full_contact() {
        let (o, c, p) = setup();
        let r = solve_cell(0.5, 4, &GammaLaw::constant(0.0), &o, &c, &p, 0).unwrap();
        assert_eq!(r.contact_fraction, 1.0);
    }

    #[test]
    fn flux_balance_values() {
        let (_, c, _) = setup();
        assert_eq!(flux_balance_alpha(&GammaLaw::constant(0.0), &c), 0.0);
        let u = flux_balance_alpha(&GammaLaw::uniform(0.0, 1.2), &c);
        let k = flux_balance_alpha(&GammaLaw::constant(0.6), &c);
        assert!((u - k).abs() < 1e-15);
    }

    #[test]
    fn guard_rejects_coarse_cells() {
        let (o, c, _) = setup();
        let p = CellParams { nodes_per_cell: 6, ..CellParams::default() };
        assert!(solve_cell(0.5, 4, &GammaLaw::constant(1.0), &o, &c, &p, 0).is_err());
    }
}

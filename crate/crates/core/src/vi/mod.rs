//! Discrete Signorini-type variational inequalities on an [`ExtensionGrid`].
//!
//! Minimizes
//! `½ Σ_edges W (Δu)² + Σ c_i u_i − Σ g_i u_i + Σ ½ β_i (u_i − ψ_i)_−²`
//! subject to `u = d` on Dirichlet nodes and `u_i ≥ φ_i` on constrained
//! row-0 nodes. Boundary terms live on row 0.

mod dst;
mod psor;
pub(crate) mod trace;

use crate::error::{Error, Result};
use crate::grid::{ExtensionGrid, Field};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use trace::TraceOperator;

/// Contact tie tolerance: `u_i − φ_i ≤ CONTACT_TOL · (1 + |φ_i|)`.
pub const CONTACT_TOL: f64 = 1e-10;

/// Largest trace dimension for which the dense Schur complement is built.
pub const TRACE_MAX_NODES: usize = 4096;

/// Convex quadratic VI on a grid.
#[derive(Debug, Clone)]
pub struct ViProblem {
    grid: Arc<ExtensionGrid>,
    dirichlet: Vec<Option<f64>>,
    lower: Vec<Option<f64>>,
    linear: Vec<f64>,
    sink: Vec<f64>,
    quadratic: Vec<Option<(f64, f64)>>,
}

impl ViProblem {
    /// Problem with homogeneous Dirichlet data on `Γ` and nothing else.
    pub fn new(grid: &Arc<ExtensionGrid>) -> Self {
        let n = grid.node_count();
        let nb = grid.n_x();
        let dirichlet = (0..n).map(|p| grid.is_gamma(p).then_some(0.0)).collect();
        ViProblem {
            grid: Arc::clone(grid),
            dirichlet,
            lower: vec![None; nb],
            linear: vec![0.0; nb],
            sink: vec![0.0; nb],
            quadratic: vec![None; nb],
        }
    }

    pub fn grid(&self) -> &Arc<ExtensionGrid> {
        &self.grid
    }

    /// Sets the constant value `g` on all of `Γ`.
    pub fn with_gamma_value(mut self, g: f64) -> Self {
        for p in 0..self.dirichlet.len() {
            if self.grid.is_gamma(p) {
                self.dirichlet[p] = Some(g);
            }
        }
        self
    }

    /// Sets Dirichlet data on `Γ` from a function of `(x, y)`.
    pub fn with_gamma_fn<F: Fn(&[f64], f64) -> f64>(mut self, f: F) -> Self {
        for p in 0..self.dirichlet.len() {
            if self.grid.is_gamma(p) {
                let (ix, j) = self.grid.split(p);
                self.dirichlet[p] = Some(f(&self.grid.x_of(ix), self.grid.y_nodes()[j]));
            }
        }
        self
    }

    fn check_row0(&self, node: usize) -> Result<()> {
        if node >= self.grid.n_x() {
            return Err(Error::usage(format!("node {node} is not on the boundary row")));
        }
        Ok(())
    }

    fn check_finite(v: f64, what: &str) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::config(format!("{what} must be finite, got {v}")));
        }
        Ok(())
    }

    /// Fixes `u = value` at any node.
    pub fn set_dirichlet(&mut self, node: usize, value: f64) -> Result<()> {
        if node >= self.dirichlet.len() {
            return Err(Error::usage(format!("node {node} out of range")));
        }
        Self::check_finite(value, "Dirichlet value")?;
        self.dirichlet[node] = Some(value);
        Ok(())
    }

    /// Removes a Dirichlet condition (row 0 only).
    pub fn clear_dirichlet(&mut self, node: usize) -> Result<()> {
        self.check_row0(node)?;
        self.dirichlet[node] = None;
        Ok(())
    }

    /// Imposes `u ≥ phi` at a row-0 node.
    pub fn set_lower_bound(&mut self, node: usize, phi: f64) -> Result<()> {
        self.check_row0(node)?;
        Self::check_finite(phi, "obstacle value")?;
        self.lower[node] = Some(phi);
        Ok(())
    }

    /// Linear coefficient `c_i` at a row-0 node.
    pub fn set_linear(&mut self, node: usize, c: f64) -> Result<()> {
        self.check_row0(node)?;
        Self::check_finite(c, "linear coefficient")?;
        self.linear[node] = c;
        Ok(())
    }

    /// Adds a point sink of the given strength; colliding sinks add up.
    pub fn add_sink(&mut self, node: usize, strength: f64) -> Result<()> {
        self.check_row0(node)?;
        Self::check_finite(strength, "sink strength")?;
        self.sink[node] += strength;
        Ok(())
    }

    /// Penalty `½ β (u − psi)_−²` at a row-0 node.
    pub fn set_quadratic(&mut self, node: usize, beta: f64, psi: f64) -> Result<()> {
        self.check_row0(node)?;
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::config(format!("penalty weight must be >= 0, got {beta}")));
        }
        Self::check_finite(psi, "penalty reference")?;
        self.quadratic[node] = (beta > 0.0).then_some((beta, psi));
        Ok(())
    }

    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.dirichlet
    }

    pub fn lower_bounds(&self) -> &[Option<f64>] {
        &self.lower
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn sinks(&self) -> &[f64] {
        &self.sink
    }

    pub fn quadratic(&self) -> &[Option<(f64, f64)>] {
        &self.quadratic
    }

    /// Row-0 nodes carrying a lower bound.
    pub fn constrained_nodes(&self) -> Vec<usize> {
        (0..self.lower.len()).filter(|&i| self.lower[i].is_some()).collect()
    }

    fn validate(&self) -> Result<()> {
        for (i, phi) in self.lower.iter().enumerate() {
            if let (Some(phi), Some(d)) = (phi, self.dirichlet[i]) {
                return Err(Error::config(format!(
                    "node {i} carries both Dirichlet value {d} and lower bound {phi}"
                )));
            }
        }
        Ok(())
    }

    /// Starting field: Dirichlet values, obstacle values, zero elsewhere.
    fn initial_values(&self, init: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut u = match init {
            Some(v) => {
                if v.len() != self.dirichlet.len() {
                    return Err(Error::usage("initial guess has the wrong length"));
                }
                v.to_vec()
            }
            None => vec![0.0; self.dirichlet.len()],
        };
        for (p, d) in self.dirichlet.iter().enumerate() {
            if let Some(d) = d {
                u[p] = *d;
            }
        }
        for (i, phi) in self.lower.iter().enumerate() {
            if let Some(phi) = phi {
                u[i] = u[i].max(*phi);
            }
        }
        Ok(u)
    }

    /// Objective value at `u`.
    pub fn objective(&self, u: &[f64]) -> f64 {
        let mut obj = self.grid.energy_of(u);
        for i in 0..self.linear.len() {
            obj += (self.linear[i] - self.sink[i]) * u[i];
            if let Some((beta, psi)) = self.quadratic[i] {
                let m = (psi - u[i]).max(0.0);
                obj += 0.5 * beta * m * m;
            }
        }
        obj
    }

    /// Stationarity residual `∂(objective)/∂u_i` (zero on Dirichlet nodes).
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.grid.apply(u);
        for i in 0..self.linear.len() {
            r[i] += self.linear[i] - self.sink[i];
            if let Some((beta, psi)) = self.quadratic[i] {
                r[i] -= beta * (psi - u[i]).max(0.0);
            }
        }
        for (p, d) in self.dirichlet.iter().enumerate() {
            if d.is_some() {
                r[p] = 0.0;
            }
        }
        r
    }

    /// KKT measure: `max |min(u−φ, r̂)|` over constrained nodes and `|r̂|`
    /// over free nodes, with `r̂ = r / diag`.
    pub fn kkt_measure(&self, u: &[f64], diag: &[f64]) -> f64 {
        let r = self.residual(u);
        let mut worst = 0.0f64;
        for p in 0..r.len() {
            if self.dirichlet[p].is_some() {
                continue;
            }
            let rh = r[p] / diag[p];
            let v = match self.lower.get(p).copied().flatten() {
                Some(phi) => (u[p] - phi).min(rh).abs(),
                None => rh.abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn trace_eligible(&self) -> Option<f64> {
        let g = &self.grid;
        if g.sigma_nodes().is_empty() {
            return None;
        }
        let mut g0 = None;
        for (p, d) in self.dirichlet.iter().enumerate() {
            if g.is_gamma(p) {
                let d = (*d)?;
                match g0 {
                    None => g0 = Some(d),
                    Some(v) if v == d => {}
                    Some(_) => return None,
                }
            } else if d.is_some() && p >= g.n_x() {
                return None;
            }
        }
        g0
    }
}

/// Sweep ordering of the grid engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    #[default]
    Lexicographic,
    /// Two-colour ordering; colours are updated in parallel.
    RedBlack,
}

/// Which relaxation engine runs the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Trace engine when the problem allows it, grid engine otherwise.
    #[default]
    Auto,
    /// Projected SOR over every grid node.
    Grid,
    /// Projected SOR on the boundary trace, using the exact discrete
    /// Dirichlet-to-Neumann map. Needs constant data on `Γ` and no interior
    /// Dirichlet nodes.
    Trace,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub omega: f64,
    pub ordering: Ordering,
    pub engine: Engine,
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_sweeps: 200_000,
            omega: 1.5,
            ordering: Ordering::Lexicographic,
            engine: Engine::Auto,
            initial: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_max_sweeps(mut self, n: usize) -> Self {
        self.max_sweeps = n;
        self
    }

    pub fn with_initial(mut self, u: Vec<f64>) -> Self {
        self.initial = Some(u);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::config(format!("relaxation must lie in (0,2), got {}", self.omega)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::config("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// Result of a VI solve.
#[derive(Debug, Clone)]
pub struct ComplementaritySolution {
    pub field: Field,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Discrete `𝒥(u)`.
    pub energy: f64,
    pub objective: f64,
    /// Constrained nodes in contact, increasing.
    pub contact_nodes: Vec<usize>,
    pub engine: Engine,
    /// Relaxation in force at the end (after any fallback).
    pub omega: f64,
}

/// Local exact minimizer of `½ D t² − b t + ½ β (t − ψ)_−²`.
pub(crate) fn local_minimizer(d: f64, b: f64, quad: Option<(f64, f64)>) -> f64 {
    let z = b / d;
    match quad {
        Some((beta, psi)) if z < psi => (b + beta * psi) / (d + beta),
        _ => z,
    }
}

pub(crate) fn local_energy(d: f64, b: f64, quad: Option<(f64, f64)>, t: f64) -> f64 {
    let mut e = 0.5 * d * t * t - b * t;
    if let Some((beta, psi)) = quad {
        let m = (psi - t).max(0.0);
        e += 0.5 * beta * m * m;
    }
    e
}

/// Relaxed, projected scalar update.
pub(crate) fn relaxed_update(
    u: f64,
    d: f64,
    b: f64,
    quad: Option<(f64, f64)>,
    lower: Option<f64>,
    omega: f64,
) -> f64 {
    let z = local_minimizer(d, b, quad);
    let mut t = u + omega * (z - u);
    if quad.is_some() && omega != 1.0 && local_energy(d, b, quad, t) > local_energy(d, b, quad, u) {
        t = z;
    }
    match lower {
        Some(phi) => t.max(phi),
        None => t,
    }
}

fn contact_nodes(problem: &ViProblem, u: &[f64]) -> Vec<usize> {
    problem
        .lower
        .iter()
        .enumerate()
        .filter_map(|(i, phi)| {
            let phi = (*phi)?;
            (u[i] - phi <= CONTACT_TOL * (1.0 + phi.abs())).then_some(i)
        })
        .collect()
}

/// Solves the VI by projected SOR.
pub fn solve(problem: &ViProblem, opts: &SolveOptions) -> Result<ComplementaritySolution> {
    opts.validate()?;
    problem.validate()?;
    let grid = &problem.grid;
    let u0 = problem.initial_values(opts.initial.as_deref())?;
    let diag = grid.diagonal();

    let g0 = problem.trace_eligible();
    let small_trace = grid.sigma_nodes().len() <= TRACE_MAX_NODES;
    let engine = match opts.engine {
        Engine::Auto if g0.is_some() && small_trace => Engine::Trace,
        Engine::Auto => Engine::Grid,
        Engine::Trace if g0.is_none() => {
            return Err(Error::usage(
                "trace engine needs constant Dirichlet data on Γ and no interior Dirichlet nodes",
            ))
        }
        e => e,
    };

    let (u, iterations, omega) = match engine {
        Engine::Trace => trace::solve(problem, g0.unwrap_or(0.0), &u0, &diag, opts)?,
        _ => psor::solve(problem, u0, &diag, opts)?,
    };
    let kkt = problem.kkt_measure(&u, &diag);
    if !(kkt < opts.tol) {
        return Err(Error::NonConvergence { iterations, residual: kkt });
    }
    let contact = contact_nodes(problem, &u);
    let energy = grid.energy_of(&u);
    let objective = problem.objective(&u);
    Ok(ComplementaritySolution {
        field: Field::new(grid, u)?,
        iterations,
        kkt_residual: kkt,
        energy,
        objective,
        contact_nodes: contact,
        engine,
        omega,
    })
}

/// Violation categories of [`residual_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// `u < φ` at a constrained node.
    BelowObstacle,
    /// Negative multiplier: the objective decreases by raising `u`.
    PositiveFlux,
    /// Both the slack and the multiplier are positive.
    Complementarity,
    /// Nonzero stationarity residual at an unconstrained row-0 node.
    NonzeroFlux,
}

/// Per-node diagnostics of a candidate solution.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Diagonally scaled stationarity residual per node (0 on Dirichlet nodes).
    pub residuals: Vec<f64>,
    /// `(node, u − φ)` for every constrained node.
    pub slacks: Vec<(usize, f64)>,
    /// `(node, lim y^a ∂_y u)` for every constrained node.
    pub constrained_flux: Vec<(usize, f64)>,
    /// Integrated flux `lim y^a ∂_y u · |dual cell|` on row 0.
    pub integrated_flux: Vec<f64>,
    pub kkt: f64,
    pub flags: Vec<(usize, Flag)>,
}

impl ResidualReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flagged_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.flags.iter().map(|f| f.0).collect();
        v.dedup();
        v
    }
}

/// Checks the sign conditions on row 0 at tolerance `tol`.
pub fn residual_report(problem: &ViProblem, field: &Field, tol: f64) -> Result<ResidualReport> {
    let grid = &problem.grid;
    if !Arc::ptr_eq(field.grid(), grid) && **field.grid() != **grid {
        return Err(Error::usage("field belongs to a different grid"));
    }
    let u = field.values();
    let diag = grid.diagonal();
    let r = problem.residual(u);
    let residuals: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let au = grid.apply(u);
    let integrated_flux: Vec<f64> = (0..grid.n_x()).map(|i| -au[i]).collect();
    let mut slacks = Vec::new();
    let mut constrained_flux = Vec::new();
    let mut flags = Vec::new();
    for i in 0..grid.n_x() {
        if problem.dirichlet[i].is_some() {
            continue;
        }
        let rh = residuals[i];
        match problem.lower[i] {
            Some(phi) => {
                let s = u[i] - phi;
                slacks.push((i, s));
                constrained_flux.push((i, integrated_flux[i] / grid.x_measure(i)));
                if s < -tol {
                    flags.push((i, Flag::BelowObstacle));
                }
                if rh < -tol {
                    flags.push((i, Flag::PositiveFlux));
                }
                if s > tol && rh > tol {
                    flags.push((i, Flag::Complementarity));
                }
            }
            None => {
                if rh.abs() > tol {
                    flags.push((i, Flag::NonzeroFlux));
                }
            }
        }
    }
    Ok(ResidualReport {
        kkt: problem.kkt_measure(u, &diag),
        residuals,
        slacks,
        constrained_flux,
        integrated_flux,
        flags,
    })
}

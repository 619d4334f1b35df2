//! The perforated problem along an ε-sweep, its effective limit, and the
//! distances between them.
//!
//! For each `(ε, seed)` the obstacle `u ≥ φ` is imposed only on the
//! rasterized holes `T_ε(ω)`. The effective problem replaces the holes by the
//! boundary penalty `½ α₀ Σ |dual_i| (u_i − φ_i)_−²` on every `Σ` node.

use crate::cell::{estimate_alpha0, flux_balance_alpha, AlphaSearch, CellParams};
use crate::error::{Error, Result};
use crate::grid::{ExtensionGrid, Field, GridSpec};
use crate::numerics::{FractionalOrder, NormalizationConstants};
use crate::perforations::{sample, GammaLaw, PerforationSet, SigmaBox};
use crate::vi::{solve, ComplementaritySolution, Engine, SolveOptions, ViProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

/// Boundary obstacle `φ(x)`, extended constantly in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Constant { value: f64 },
    /// `max(0, height − curvature |x − center|²)`.
    Bump { height: f64, curvature: f64, center: Vec<f64> },
    /// Piecewise linear in one dimension, clamped outside the table.
    Tabulated { x: Vec<f64>, values: Vec<f64> },
}

impl Obstacle {
    pub fn default_bump(n: usize) -> Self {
        Obstacle::Bump { height: 1.0, curvature: 8.0, center: vec![0.5; n] }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Obstacle::Constant { value } if !value.is_finite() => Err(Error::config("obstacle value must be finite")),
            Obstacle::Bump { height, curvature, center } => {
                if center.len() != n {
                    return Err(Error::config(format!("bump centre needs {n} coordinates")));
                }
                if !height.is_finite() || !(*curvature >= 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config("bump needs finite height and centre, curvature >= 0"));
                }
                Ok(())
            }
            Obstacle::Tabulated { x, values } => {
                if n != 1 {
                    return Err(Error::config("tabulated obstacles are one-dimensional"));
                }
                if x.is_empty() || x.len() != values.len() {
                    return Err(Error::config("tabulated obstacle needs equal, non-empty x and values"));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::config("tabulated x must be finite and strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Obstacle::Constant { value } => *value,
            Obstacle::Bump { height, curvature, center } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (height - curvature * d2).max(0.0)
            }
            Obstacle::Tabulated { x: xs, values } => {
                let t = x[0];
                let last = xs.len() - 1;
                if t <= xs[0] {
                    return values[0];
                }
                if t >= xs[last] {
                    return values[last];
                }
                let k = xs.partition_point(|&v| v <= t) - 1;
                let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
                values[k] * (1.0 - w) + values[k + 1] * w
            }
        }
    }
}

/// Where `α₀` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum Alpha0Source {
    Supplied {
        value: f64,
    },
    /// `E[γ̃]`.
    FluxBalance,
    /// Cell-problem estimate on a window of size `t`.
    Estimated {
        t: usize,
        seeds: Vec<u64>,
        #[serde(default)]
        cell: CellParams,
        #[serde(default)]
        search: AlphaSearch,
    },
}

impl Default for Alpha0Source {
    fn default() -> Self {
        Alpha0Source::FluxBalance
    }
}

/// Grid resolution of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyGrid {
    /// Nodes per axis of the finest grid (effective problem, comparisons).
    pub nx: usize,
    /// Per-ε node counts, each at most `nx`; defaults to `nx` everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx_per_eps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
    #[serde(default = "one")]
    pub ny_factor: f64,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub order: FractionalOrder,
    pub law: GammaLaw,
    pub obstacle: Obstacle,
    /// Constant Dirichlet value on `Γ`.
    #[serde(default)]
    pub boundary_value: f64,
    pub domain: SigmaBox,
    pub eps: Vec<f64>,
    pub grid: StudyGrid,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub alpha0: Alpha0Source,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<f64>,
    #[serde(default)]
    pub engine: Engine,
}

impl StudyConfig {
    /// The default desk-scale plane: `Σ = (0,1)`, `Y = ½`, bump obstacle, `g = 0`.
    pub fn desk(order: FractionalOrder, law: GammaLaw, eps: Vec<f64>, nx: usize, seeds: Vec<u64>) -> Self {
        let n = order.n();
        StudyConfig {
            order,
            law,
            obstacle: Obstacle::default_bump(n),
            boundary_value: 0.0,
            domain: SigmaBox::unit(n),
            eps,
            grid: StudyGrid { nx, nx_per_eps: None, y_max: None, grading: None, ny_factor: 1.0 },
            seeds,
            alpha0: Alpha0Source::FluxBalance,
            tol: default_tol(),
            envelope: None,
            engine: Engine::Auto,
        }
    }

    pub fn constants(&self) -> NormalizationConstants {
        NormalizationConstants::for_order(&self.order)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.order.n();
        self.law.validate()?;
        self.obstacle.validate(n)?;
        if self.domain.n != n || !(self.domain.hi > self.domain.lo) {
            return Err(Error::config("domain must match the order's dimension and have hi > lo"));
        }
        if !self.boundary_value.is_finite() {
            return Err(Error::config("boundary_value must be finite"));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::config("eps list must be non-empty and positive"));
        }
        if self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::config("eps list must be strictly decreasing"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol must be positive"));
        }
        if let Some(list) = &self.grid.nx_per_eps {
            if list.len() != self.eps.len() || list.iter().any(|&m| m > self.grid.nx) {
                return Err(Error::config("nx_per_eps needs one entry per eps, each at most grid.nx"));
            }
        }
        if let Alpha0Source::Supplied { value } = self.alpha0 {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::config("supplied alpha0 must be finite and >= 0"));
            }
        }
        Ok(())
    }

    fn y_max(&self) -> f64 {
        self.grid.y_max.unwrap_or(0.5 * (self.domain.hi - self.domain.lo))
    }

    fn grid_with(&self, nx: usize) -> Result<Arc<ExtensionGrid>> {
        let a = self.order.a();
        let q = self.grid.grading.unwrap_or_else(|| GridSpec::default_grading(a));
        let y_max = self.y_max();
        let dx = (self.domain.hi - self.domain.lo) / (nx.max(2) - 1) as f64;
        let ny = (GridSpec::matched_ny(y_max, dx, q) as f64 * self.grid.ny_factor).ceil() as usize;
        let spec = GridSpec {
            n: self.order.n(),
            x_lo: self.domain.lo,
            x_hi: self.domain.hi,
            nx,
            y_max,
            ny: ny.max(2),
            grading: Some(q),
        };
        ExtensionGrid::new(&spec, a)
    }

    /// Grid used for the ε at position `k` of the sweep.
    pub fn grid_for(&self, k: usize) -> Result<Arc<ExtensionGrid>> {
        let nx = self.grid.nx_per_eps.as_ref().map_or(self.grid.nx, |l| l[k]);
        self.grid_with(nx)
    }

    /// The common finest grid.
    pub fn fine_grid(&self) -> Result<Arc<ExtensionGrid>> {
        self.grid_with(self.grid.nx)
    }

    fn options(&self) -> SolveOptions {
        SolveOptions::default().with_tol(self.tol).with_engine(self.engine)
    }

    fn perforations(&self, eps: f64, seed: u64) -> Result<PerforationSet> {
        sample(&self.law, eps, &self.domain, &self.order, &self.constants(), seed, self.envelope)
    }
}

/// Perforated VI on `grid`: `u ≥ φ` on the rasterized holes, `u = g` on `Γ`.
pub fn perforated_problem(config: &StudyConfig, grid: &Arc<ExtensionGrid>, eps: f64, seed: u64) -> Result<ViProblem> {
    let holes = config.perforations(eps, seed)?;
    let nodes = holes.rasterize(grid, |x| config.obstacle.eval(x))?;
    let mut p = ViProblem::new(grid).with_gamma_value(config.boundary_value);
    for (node, phi) in nodes {
        p.set_lower_bound(node, phi)?;
    }
    Ok(p)
}

/// Solves the perforated problem on the grid assigned to `eps` (its position
/// in the sweep, or the finest grid if it is not part of it).
pub fn solve_perforated(config: &StudyConfig, eps: f64, seed: u64) -> Result<ComplementaritySolution> {
    config.validate()?;
    let grid = match config.eps.iter().position(|&e| e == eps) {
        Some(k) => config.grid_for(k)?,
        None => config.fine_grid()?,
    };
    solve(&perforated_problem(config, &grid, eps, seed)?, &config.options())
}

/// Effective VI: penalty `β_i = α₀ |dual_i|` towards `φ(x_i)` on every `Σ` node.
pub fn effective_problem(config: &StudyConfig, grid: &Arc<ExtensionGrid>, alpha0: f64) -> Result<ViProblem> {
    if !(alpha0 >= 0.0) || !alpha0.is_finite() {
        return Err(Error::config(format!("alpha0 must be finite and >= 0, got {alpha0}")));
    }
    let mut p = ViProblem::new(grid).with_gamma_value(config.boundary_value);
    if alpha0 > 0.0 {
        for node in grid.sigma_nodes() {
            let phi = config.obstacle.eval(&grid.x_of(node));
            p.set_quadratic(node, alpha0 * grid.x_measure(node), phi)?;
        }
    }
    Ok(p)
}

/// Solves the effective problem on the finest grid.
pub fn solve_effective(config: &StudyConfig, alpha0: f64) -> Result<ComplementaritySolution> {
    config.validate()?;
    let grid = config.fine_grid()?;
    solve(&effective_problem(config, &grid, alpha0)?, &config.options())
}

/// `α₀` and, for estimates, the final bisection bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alpha0Value {
    pub value: f64,
    pub source: String,
    pub bracket: Option<(f64, f64)>,
}

pub fn resolve_alpha0(config: &StudyConfig) -> Result<Alpha0Value> {
    let constants = config.constants();
    Ok(match &config.alpha0 {
        Alpha0Source::Supplied { value } => Alpha0Value { value: *value, source: "supplied".into(), bracket: None },
        Alpha0Source::FluxBalance => Alpha0Value {
            value: flux_balance_alpha(&config.law, &constants),
            source: "flux_balance".into(),
            bracket: None,
        },
        Alpha0Source::Estimated { t, seeds, cell, search } => {
            let est = estimate_alpha0(&config.law, &config.order, &constants, cell, *t, seeds, search)?;
            Alpha0Value { value: est.alpha0, source: "estimated".into(), bracket: Some(est.bracket) }
        }
    })
}

/// Capacitary potential of the rasterized holes: `1` on them, `0` on `Γ`,
/// discrete weighted-harmonic elsewhere.
pub fn hole_potential(config: &StudyConfig, grid: &Arc<ExtensionGrid>, eps: f64, seed: u64) -> Result<Field> {
    let holes = config.perforations(eps, seed)?;
    let nodes = holes.rasterize(grid, |_| 0.0)?;
    let mut p = ViProblem::new(grid);
    for (node, _) in nodes {
        p.set_dirichlet(node, 1.0)?;
    }
    Ok(solve(&p, &config.options())?.field)
}

/// `𝒥(v + (φ − v)_+ w)` for the test function of the limit argument, with
/// `w` the hole potential. The competitor is admissible for the perforated
/// problem, so its energy bounds `𝒥(u^ε)` from above.
pub fn sandwich_energy(config: &StudyConfig, v: &Field, w: &Field) -> Result<f64> {
    let grid = w.grid();
    let v = if Arc::ptr_eq(v.grid(), grid) { v.clone() } else { v.resample(grid)? };
    let n_x = grid.n_x();
    let mut z = v.into_values();
    for (p, zp) in z.iter_mut().enumerate() {
        let phi = config.obstacle.eval(&grid.x_of(p % n_x));
        *zp += (phi - *zp).max(0.0) * w.values()[p];
    }
    grid.energy(&Field::new(grid, z)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub eps: f64,
    pub seed: u64,
    pub energy_eps: f64,
    pub energy_eff: f64,
    pub l2_bulk: f64,
    pub l2_trace: f64,
    pub contact_frac: f64,
    pub constrained: usize,
    pub iterations: usize,
}

impl StudyRow {
    pub fn energy_gap(&self) -> f64 {
        (self.energy_eps - self.energy_eff).abs()
    }
}

/// Mean and standard error over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Stat { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsAggregate {
    pub eps: f64,
    pub nx: usize,
    pub l2_trace: Stat,
    pub l2_bulk: Stat,
    pub energy_eps: Stat,
    pub energy_gap: Stat,
    pub contact_frac: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seeds: Vec<u64>,
    pub grid: StudyGrid,
    pub fine: GridSpec,
    pub alpha0: Alpha0Value,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub aggregates: Vec<EpsAggregate>,
    /// `𝒥_α(ū)`.
    pub energy_eff: f64,
    pub effective_contact_frac: f64,
    pub provenance: Provenance,
}

/// A study that stopped at a failed solve, with the rows finished before it.
#[derive(Debug)]
pub struct StudyAbort {
    pub error: Error,
    pub completed: Vec<StudyRow>,
}

impl From<Error> for StudyAbort {
    fn from(error: Error) -> Self {
        StudyAbort { error, completed: Vec::new() }
    }
}

/// Trace and bulk distances between fields on the same grid.
pub fn distances(a: &Field, b: &Field) -> Result<(f64, f64)> {
    let grid = a.grid();
    if !Arc::ptr_eq(a.grid(), b.grid()) {
        return Err(Error::usage("fields live on different grids"));
    }
    let diff = a - b;
    let trace: f64 = diff.trace().iter().enumerate().map(|(ix, d)| grid.x_measure(ix) * d * d).sum();
    Ok((trace.sqrt(), grid.weighted_l2_norm(&diff)?.sqrt()))
}

fn fraction_below(field: &Field, config: &StudyConfig) -> f64 {
    let grid = field.grid();
    let sigma = grid.sigma_nodes();
    let below = sigma
        .iter()
        .filter(|&&p| field.values()[p] < config.obstacle.eval(&grid.x_of(p)))
        .count();
    below as f64 / sigma.len().max(1) as f64
}

/// Runs the sweep. `(ε, seed)` pairs are solved in parallel; rows come out
/// ordered by ε, then by position in the seed list.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport, StudyAbort> {
    config.validate()?;
    let fine = config.fine_grid()?;
    let grids: Vec<Arc<ExtensionGrid>> = (0..config.eps.len())
        .map(|k| if config.grid.nx_per_eps.is_some() { config.grid_for(k) } else { Ok(fine.clone()) })
        .collect::<Result<_>>()?;
    // every guard is checked before any solve starts
    let mut problems = Vec::new();
    for (k, &eps) in config.eps.iter().enumerate() {
        for &seed in &config.seeds {
            problems.push((k, eps, seed, perforated_problem(config, &grids[k], eps, seed)?));
        }
    }

    let alpha0 = resolve_alpha0(config)?;
    let effective = solve(&effective_problem(config, &fine, alpha0.value)?, &config.options())?;
    let opts = config.options();

    let results: Vec<Result<StudyRow>> = problems
        .par_iter()
        .map(|(k, eps, seed, problem)| {
            let sol = solve(problem, &opts)?;
            let constrained = problem.constrained_nodes().len();
            let contact_frac =
                if constrained == 0 { 0.0 } else { sol.contact_nodes.len() as f64 / constrained as f64 };
            let u = if Arc::ptr_eq(&grids[*k], &fine) { sol.field } else { sol.field.resample(&fine)? };
            let (l2_trace, l2_bulk) = distances(&u, &effective.field)?;
            Ok(StudyRow {
                eps: *eps,
                seed: *seed,
                energy_eps: sol.objective,
                energy_eff: effective.objective,
                l2_bulk,
                l2_trace,
                contact_frac,
                constrained,
                iterations: sol.iterations,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(error) => {
                return Err(StudyAbort { error, completed: rows });
            }
        }
    }

    let aggregates = config
        .eps
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let sel: Vec<&StudyRow> = rows.iter().filter(|r| r.eps == eps).collect();
            let col = |f: &dyn Fn(&StudyRow) -> f64| Stat::of(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            EpsAggregate {
                eps,
                nx: grids[k].nx(),
                l2_trace: col(&|r| r.l2_trace),
                l2_bulk: col(&|r| r.l2_bulk),
                energy_eps: col(&|r| r.energy_eps),
                energy_gap: col(&|r| r.energy_gap()),
                contact_frac: col(&|r| r.contact_frac),
            }
        })
        .collect();

    Ok(StudyReport {
        rows,
        aggregates,
        energy_eff: effective.objective,
        effective_contact_frac: fraction_below(&effective.field, config),
        provenance: Provenance {
            seeds: config.seeds.clone(),
            grid: config.grid.clone(),
            fine: fine.spec().clone(),
            alpha0,
            tol: config.tol,
        },
    })
}

/// Checks `d_{k+1} ≤ (1 + slack) d_k` along a sequence.
pub fn decreasing_with_slack(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

/// Writes the per-run table.
pub fn write_rows_csv<W: Write>(rows: &[StudyRow], mut w: W) -> Result<()> {
    writeln!(w, "eps,seed,energy_eps,energy_eff,l2_bulk,l2_trace,contact_frac")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.eps, r.seed, r.energy_eps, r.energy_eff, r.l2_bulk, r.l2_trace, r.contact_frac
        )?;
    }
    Ok(())
}

impl StudyReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(&self.rows, w)
    }

    pub fn mean_l2_trace(&self) -> Vec<f64> {
        self.aggregates.iter().map(|a| a.l2_trace.mean).collect()
    }

    pub fn mean_energy_gap(&self) -> Vec<f64> {
        self.aggregates.iter().map(|a| a.energy_gap.mean).collect()
    }

    /// Log-log plot of the mean trace distance and energy gap against ε.
    pub fn svg(&self) -> String {
        let eps: Vec<f64> = self.aggregates.iter().map(|a| a.eps).collect();
        let series = [("l2_trace", "#1f77b4", self.mean_l2_trace()), ("energy_gap", "#d62728", self.mean_energy_gap())];
        loglog_svg("distance to the effective solution", "eps", &eps, &series)
    }
}

fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let pos: Vec<f64> = values.filter(|v| *v > 0.0 && v.is_finite()).collect();
    if pos.is_empty() {
        return (-1.0, 0.0);
    }
    let lo = pos.iter().cloned().fold(f64::INFINITY, f64::min).log10().floor();
    let hi = pos.iter().cloned().fold(f64::NEG_INFINITY, f64::max).log10().ceil();
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Hand-written SVG line chart on log-log axes. Non-positive values are
/// drawn at the bottom edge.
pub fn loglog_svg(title: &str, xlabel: &str, xs: &[f64], series: &[(&str, &str, Vec<f64>)]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let (x0, x1) = log_range(xs.iter().cloned());
    let (y0, y1) = log_range(series.iter().flat_map(|s| s.2.iter().cloned()));
    let px = |x: f64| left + (x.log10() - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| {
        let t = if y > 0.0 { ((y.log10() - y0) / (y1 - y0)).clamp(0.0, 1.0) } else { 0.0 };
        h - bottom - t * (h - top - bottom)
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{:.1}" stroke="#dddddd"/>"##, h - bottom);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">1e{d}</text>"#, h - bottom + 16.0);
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#dddddd"/>"##, w - right);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">1e{d}</text>"#, left - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + (w - left - right) / 2.0,
        h - 12.0,
        escape(xlabel)
    );
    for (k, (name, color, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 20.0 + 20.0 * k as f64;
        let lx = w - right + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(law: GammaLaw) -> StudyConfig {
        let order = FractionalOrder::new(1, 0.25).unwrap();
        StudyConfig::desk(order, law, vec![0.25, 0.125], 513, vec![0, 1])
    }

    #[test]
    fn obstacle_shapes() {
        let b = Obstacle::default_bump(1);
        assert_eq!(b.eval(&[0.5]), 1.0);
        assert!((b.eval(&[0.25]) - 0.5).abs() < 1e-15);
        assert_eq!(b.eval(&[0.0]), 0.0);
        let t = Obstacle::Tabulated { x: vec![0.0, 1.0], values: vec![0.0, 2.0] };
        assert_eq!(t.eval(&[0.25]), 0.5);
        assert_eq!(t.eval(&[3.0]), 2.0);
        assert!(Obstacle::Tabulated { x: vec![1.0, 0.0], values: vec![0.0, 0.0] }.validate(1).is_err());
    }

    #[test]
    fn eps_must_decrease() {
        let mut c = small(GammaLaw::constant(1.0));
        c.eps = vec![0.125, 0.25];
        assert!(c.validate().unwrap_err().is_config());
    }

    #[test]
    fn zero_law_gives_zero_distances() {
        let mut c = small(GammaLaw::constant(0.0));
        c.alpha0 = Alpha0Source::Supplied { value: 0.0 };
        let rep = run_study(&c).unwrap();
        assert_eq!(rep.rows.len(), 4);
        for r in &rep.rows {
            assert!(r.l2_trace <= 10.0 * c.tol && r.l2_bulk <= 10.0 * c.tol);
            assert_eq!(r.constrained, 0);
        }
    }

    #[test]
    fn coarse_guard_is_a_config_error() {
        let mut c = small(GammaLaw::constant(1.0));
        c.grid.nx = 33;
        let err = run_study(&c).unwrap_err();
        assert!(err.error.is_config());
    }

    #[test]
    fn svg_has_two_series() {
        let xs = [0.25, 0.125];
        let svg = loglog_svg("t", "eps", &xs, &[("a", "red", vec![1.0, 0.5]), ("b", "blue", vec![0.0, 0.1])]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.ends_with("</svg>\n"));
    }
}

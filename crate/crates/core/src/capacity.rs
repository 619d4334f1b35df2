//! Numerical s-capacity of boundary sets.
//!
//! `cap_s(A) = inf { ∫ y^a |∇h|² : h ≥ 1 on A }` over the upper half space.
//! The infimum is approximated by the Dirichlet problem `h = 1` on the nodes
//! of `A`, `h = 0` on a truncation shell at distance `R`, then extrapolated
//! in `R^{-(n-2s)}` to `R = ∞`.

use crate::error::{Error, Result};
use crate::grid::{ExtensionGrid, Field, GridSpec};
use crate::numerics::{fundamental_h_radial, FractionalOrder, NormalizationConstants};
use crate::vi::{solve, SolveOptions, ViProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Union of intervals (n = 1) or disks (n = 2) on `{y = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySet {
    Intervals { intervals: Vec<[f64; 2]> },
    Disks { disks: Vec<Disk> },
}

impl BoundarySet {
    /// Ball of radius `r` centred at the origin.
    pub fn ball(n: usize, r: f64) -> Self {
        if n == 1 {
            BoundarySet::Intervals { intervals: vec![[-r, r]] }
        } else {
            BoundarySet::Disks { disks: vec![Disk { center: [0.0, 0.0], radius: r }] }
        }
    }

    /// Two intervals of length `len` separated by `gap`, centred at 0.
    pub fn two_intervals(len: f64, gap: f64) -> Self {
        let h = 0.5 * gap;
        BoundarySet::Intervals { intervals: vec![[-h - len, -h], [h, h + len]] }
    }

    pub fn n(&self) -> usize {
        match self {
            BoundarySet::Intervals { .. } => 1,
            BoundarySet::Disks { .. } => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            BoundarySet::Intervals { intervals } => intervals.iter().all(|iv| !(iv[1] >= iv[0])),
            BoundarySet::Disks { disks } => disks.iter().all(|d| !(d.radius >= 0.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BoundarySet::Intervals { intervals } => {
                intervals.iter().all(|iv| iv[0].is_finite() && iv[1].is_finite() && iv[1] >= iv[0])
            }
            BoundarySet::Disks { disks } => disks
                .iter()
                .all(|d| d.radius >= 0.0 && d.radius.is_finite() && d.center.iter().all(|c| c.is_finite())),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config("set components must be finite with nonnegative size"))
        }
    }

    /// Per-axis bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            BoundarySet::Intervals { intervals } => {
                let lo = intervals.iter().map(|iv| iv[0]).fold(f64::INFINITY, f64::min);
                let hi = intervals.iter().map(|iv| iv[1]).fold(f64::NEG_INFINITY, f64::max);
                vec![(lo, hi)]
            }
            BoundarySet::Disks { disks } => (0..2)
                .map(|k| {
                    let lo = disks.iter().map(|d| d.center[k] - d.radius).fold(f64::INFINITY, f64::min);
                    let hi = disks.iter().map(|d| d.center[k] + d.radius).fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounding_box().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Largest extent of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.bounding_box().iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    fn component_contains(&self, c: usize, x: &[f64]) -> bool {
        const TIE: f64 = 1e-12;
        match self {
            BoundarySet::Intervals { intervals } => {
                let iv = intervals[c];
                let t = TIE * (iv[1] - iv[0]).max(1e-300);
                x[0] >= iv[0] - t && x[0] <= iv[1] + t
            }
            BoundarySet::Disks { disks } => {
                let d = disks[c];
                let r2 = (x[0] - d.center[0]).powi(2) + (x[1] - d.center[1]).powi(2);
                r2.sqrt() <= d.radius * (1.0 + TIE)
            }
        }
    }

    fn components(&self) -> usize {
        match self {
            BoundarySet::Intervals { intervals } => intervals.len(),
            BoundarySet::Disks { disks } => disks.len(),
        }
    }

    /// The set shifted by `-offset`.
    pub fn translated(&self, offset: &[f64]) -> Self {
        match self {
            BoundarySet::Intervals { intervals } => BoundarySet::Intervals {
                intervals: intervals.iter().map(|iv| [iv[0] - offset[0], iv[1] - offset[0]]).collect(),
            },
            BoundarySet::Disks { disks } => BoundarySet::Disks {
                disks: disks
                    .iter()
                    .map(|d| Disk { center: [d.center[0] - offset[0], d.center[1] - offset[1]], radius: d.radius })
                    .collect(),
            },
        }
    }

    /// The set dilated by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            BoundarySet::Intervals { intervals } => BoundarySet::Intervals {
                intervals: intervals.iter().map(|iv| [iv[0] * factor, iv[1] * factor]).collect(),
            },
            BoundarySet::Disks { disks } => BoundarySet::Disks {
                disks: disks
                    .iter()
                    .map(|d| Disk {
                        center: [d.center[0] * factor, d.center[1] * factor],
                        radius: d.radius * factor,
                    })
                    .collect(),
            },
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.components()).any(|c| self.component_contains(c, x))
    }
}

/// Truncation and resolution of a capacity computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityParams {
    /// Node spacing on `{y = 0}`, shared by every truncation radius.
    pub spacing: f64,
    /// Truncation half-widths `R`.
    pub r_out: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
    /// Scales the number of vertical cells relative to the matched default.
    #[serde(default = "one")]
    pub ny_factor: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

impl CapacityParams {
    /// Spacing `diameter / nodes_across` and `R ∈ {8, 16, 32}·diameter`.
    pub fn for_set(set: &BoundarySet, nodes_across: usize) -> Self {
        let d = set.diameter();
        CapacityParams {
            spacing: d / nodes_across as f64,
            r_out: vec![8.0 * d, 16.0 * d, 32.0 * d],
            grading: None,
            ny_factor: 1.0,
            tol: default_tol(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::config(format!("spacing must be positive, got {}", self.spacing)));
        }
        if self.r_out.is_empty() || self.r_out.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::config("r_out must be a nonempty list of positive radii"));
        }
        if !(self.ny_factor > 0.0) {
            return Err(Error::config("ny_factor must be positive"));
        }
        Ok(())
    }
}

/// One truncated solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawCapacity {
    pub r_out: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub energy: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub extrapolated: bool,
    pub raw: Vec<RawCapacity>,
}

impl CapacityEstimate {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r_out,spacing,nx,ny,energy,capacity,extrapolated")?;
        for r in &self.raw {
            writeln!(w, "{},{},{},{},{},{},{}", r.r_out, r.spacing, r.nx, r.ny, r.energy, r.capacity, self.value)?;
        }
        Ok(())
    }
}

/// Neville evaluation at `t = 0` of the interpolating polynomial through
/// `(t_i, v_i)`.
pub fn extrapolate_to_zero(t: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let m = p.len();
    for level in 1..m {
        for i in 0..m - level {
            let (ti, tj) = (t[i], t[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

struct Potential {
    grid: Arc<ExtensionGrid>,
    field: Field,
    raw: RawCapacity,
}

fn potential(set: &BoundarySet, order: &FractionalOrder, params: &CapacityParams, r_out: f64) -> Result<Potential> {
    let h = params.spacing;
    let n = order.n();
    let half = (r_out / h).ceil() as usize;
    let nx = 2 * half + 1;
    let set = set.translated(&set.center());
    let q = params.grading.unwrap_or_else(|| GridSpec::default_grading(order.a()));
    let ny = ((GridSpec::matched_ny(r_out, h, q) as f64) * params.ny_factor).ceil() as usize;
    // cube around the set centre, which sits at the origin
    let x_lo = -(half as f64) * h;
    let spec = GridSpec { n, x_lo, x_hi: x_lo + (nx - 1) as f64 * h, nx, y_max: r_out, ny: ny.max(2), grading: Some(q) };
    let grid = ExtensionGrid::new(&spec, order.a())?;
    let mut problem = ViProblem::new(&grid);
    let mut per_component = vec![0usize; set.components()];
    for ix in grid.sigma_nodes() {
        let x = grid.x_of(ix);
        let mut inside = false;
        for (c, count) in per_component.iter_mut().enumerate() {
            if set.component_contains(c, &x) {
                *count += 1;
                inside = true;
            }
        }
        if inside {
            problem.set_dirichlet(ix, 1.0)?;
        }
    }
    let across = |count: usize| if n == 1 { count } else { (count as f64).sqrt().floor() as usize };
    if let Some(c) = per_component.iter().position(|&k| across(k) < 2) {
        return Err(Error::config(format!(
            "component {c} is covered by fewer than 2 nodes across at spacing {h}; refine the grid"
        )));
    }
    let sol = solve(&problem, &SolveOptions::default().with_tol(params.tol))?;
    let raw = RawCapacity {
        r_out,
        spacing: h,
        nx,
        ny: spec.ny,
        energy: sol.energy,
        capacity: 2.0 * sol.energy,
    };
    Ok(Potential { grid, field: sol.field, raw })
}

/// Capacity of `set`, extrapolated across `params.r_out` when it lists at
/// least two radii.
pub fn estimate_capacity(set: &BoundarySet, order: &FractionalOrder, params: &CapacityParams) -> Result<CapacityEstimate> {
    set.validate()?;
    params.validate()?;
    if set.n() != order.n() {
        return Err(Error::config("set dimension differs from the order's dimension"));
    }
    if set.is_empty() {
        return Ok(CapacityEstimate { value: 0.0, extrapolated: false, raw: Vec::new() });
    }
    let raw: Vec<RawCapacity> = params
        .r_out
        .par_iter()
        .map(|&r| potential(set, order, params, r).map(|p| p.raw))
        .collect::<Result<_>>()?;
    Ok(summarize(order, raw))
}

fn summarize(order: &FractionalOrder, raw: Vec<RawCapacity>) -> CapacityEstimate {
    if raw.len() < 2 {
        let value = raw[0].capacity;
        return CapacityEstimate { value, extrapolated: false, raw };
    }
    // the truncated problem behaves like a capacitor: 1/cap_R = 1/cap - k R^{-(n-2s)} + ...
    let t = truncation_variable(order, &raw);
    let v: Vec<f64> = raw.iter().map(|r| 1.0 / r.capacity).collect();
    CapacityEstimate { value: 1.0 / extrapolate_to_zero(&t, &v), extrapolated: true, raw }
}

fn truncation_variable(order: &FractionalOrder, raw: &[RawCapacity]) -> Vec<f64> {
    raw.iter().map(|r| r.r_out.powf(-order.ext_exp())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarFieldRow {
    pub rho: f64,
    /// Potential at height `ρ` above the set centre, extrapolated in `R`.
    pub potential: f64,
    /// `potential / (cap · (2/μ) · h(ρ))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarFieldReport {
    pub capacity: CapacityEstimate,
    pub rows: Vec<FarFieldRow>,
}

impl FarFieldReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rho,potential,ratio")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.rho, r.potential, r.ratio)?;
        }
        Ok(())
    }
}

/// Compares the capacitary potential with `cap · (2/μ) · h` at heights
/// `radii` above the set centre.
pub fn far_field_check(
    set: &BoundarySet,
    order: &FractionalOrder,
    constants: &NormalizationConstants,
    params: &CapacityParams,
    radii: &[f64],
) -> Result<FarFieldReport> {
    set.validate()?;
    params.validate()?;
    if set.is_empty() {
        return Err(Error::config("far-field check needs a nonempty set"));
    }
    let r_min = params.r_out.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(rho) = radii.iter().find(|&&rho| !(rho > 0.0 && rho < r_min)) {
        return Err(Error::domain(format!("probe radius {rho} is outside (0, {r_min})")));
    }
    let pots: Vec<Potential> = params
        .r_out
        .par_iter()
        .map(|&r| potential(set, order, params, r))
        .collect::<Result<_>>()?;
    let center = vec![0.0; order.n()];
    let capacity = summarize(order, pots.iter().map(|p| p.raw.clone()).collect());
    let t = truncation_variable(order, &capacity.raw);
    let rows = radii
        .iter()
        .map(|&rho| {
            // potential per unit charge: φ_R(ρ)/cap_R = h(ρ) - k R^{-(n-2s)} + ...
            let v: Vec<f64> = pots
                .iter()
                .map(|p| p.grid.interpolate(p.field.values(), &center, rho) / p.raw.capacity)
                .collect();
            let per_charge = if v.len() > 1 { extrapolate_to_zero(&t, &v) } else { v[0] };
            let h = fundamental_h_radial(order, constants, rho);
            let ratio = per_charge / (constants.sink_strength(1.0) * h);
            FarFieldRow { rho, potential: per_charge * capacity.value, ratio }
        })
        .collect();
    Ok(FarFieldReport { capacity, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomials() {
        let t = [0.5, 0.25, 0.125];
        let v: Vec<f64> = t.iter().map(|x| 3.0 - 2.0 * x + 5.0 * x * x).collect();
        assert!((extrapolate_to_zero(&t, &v) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_has_zero_capacity() {
        let o = FractionalOrder::new(1, 0.25).unwrap();
        let set = BoundarySet::Intervals { intervals: vec![] };
        let p = CapacityParams { spacing: 0.1, r_out: vec![1.0], grading: None, ny_factor: 1.0, tol: 1e-10 };
        assert_eq!(estimate_capacity(&set, &o, &p).unwrap().value, 0.0);
    }

    #[test]
    fn unresolved_set_is_rejected() {
        let o = FractionalOrder::new(1, 0.25).unwrap();
        let set = BoundarySet::ball(1, 0.01);
        let p = CapacityParams { spacing: 0.1, r_out: vec![1.0], grading: None, ny_factor: 1.0, tol: 1e-10 };
        assert!(matches!(estimate_capacity(&set, &o, &p), Err(Error::Config(_))));
    }
}

//! Tensor grids on the slab `D = Σ × (0, Y]` with the degenerate weight
//! `y^a` folded into exact edge weights.
//!
//! Nodes are `x_i = x_lo + i Δx` along each of the `n` horizontal axes and
//! `y_j = Y (j/ny)^q` vertically. The discrete energy is
//! `½ Σ_edges W (Δu)²` where
//!
//! * a horizontal edge in row `j` carries `∫_{dual_j} t^a dt · (transverse
//!   dual measure) / Δx`,
//! * a vertical edge `(j, j+1)` carries `(dual x measure) / ∫_{y_j}^{y_{j+1}}
//!   t^{-a} dt`, the harmonic cell average of the weight.
//!
//! The harmonic average makes the two-point flux exact for profiles solving
//! `(y^a u')' = 0`, which keeps the discrete trace `lim y^a ∂_y u` consistent
//! in the first cell where `y^a` degenerates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// Parameters of an [`ExtensionGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Number of horizontal axes (1 or 2).
    pub n: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Nodes per horizontal axis, end points included.
    pub nx: usize,
    /// Slab height `Y`.
    pub y_max: f64,
    /// Number of vertical cells; rows are `0..=ny`.
    pub ny: usize,
    /// Vertical grading exponent `q ≥ 1`; defaults to `max(1, 2/(1+a))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
}

impl GridSpec {
    /// Default grading for weight exponent `a`.
    pub fn default_grading(a: f64) -> f64 {
        (2.0 / (1.0 + a)).max(1.0)
    }

    /// Smallest `ny` such that the vertical spacing around `y = Δx` does not
    /// exceed `Δx` under grading `q`.
    pub fn matched_ny(y_max: f64, dx: f64, q: f64) -> usize {
        let ratio = (dx / y_max).min(1.0);
        // local spacing at y: q Y (y/Y)^{(q-1)/q} / ny
        let ny = q * y_max * ratio.powf((q - 1.0) / q) / dx;
        (ny.ceil() as usize).max(2)
    }
}

/// Immutable tensor grid with precomputed weights.
#[derive(Debug)]
pub struct ExtensionGrid {
    spec: GridSpec,
    a: f64,
    grading: f64,
    dx: f64,
    y: Vec<f64>,
    /// `∫_{dual_j} t^a dt` per row.
    mass_y: Vec<f64>,
    /// `1 / ∫_{y_j}^{y_{j+1}} t^{-a} dt` per vertical cell.
    hy_inv: Vec<f64>,
    /// Dual width of each index along one axis.
    dual_1d: Vec<f64>,
    /// Dual measure of each horizontal position (product over axes).
    xmeas: Vec<f64>,
    n_x: usize,
    trace_cache: OnceLock<Arc<crate::vi::trace::TraceOperator>>,
}

impl PartialEq for ExtensionGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.a == other.a
    }
}

fn weight_integral(lo: f64, hi: f64, p: f64) -> f64 {
    // ∫_lo^hi t^p dt for p > -1
    (hi.powf(1.0 + p) - lo.powf(1.0 + p)) / (1.0 + p)
}

/// Cell average of `t^a` over `[lo, hi]`.
pub fn cell_average_weight(lo: f64, hi: f64, a: f64) -> f64 {
    weight_integral(lo, hi, a) / (hi - lo)
}

impl ExtensionGrid {
    /// Builds a grid for weight exponent `a ∈ (-1, 1)`.
    pub fn new(spec: &GridSpec, a: f64) -> Result<Arc<Self>> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::config(format!("weight exponent a must lie in (-1,1), got {a}")));
        }
        if spec.n != 1 && spec.n != 2 {
            return Err(Error::config(format!("grids support n = 1 or 2, got {}", spec.n)));
        }
        if spec.nx < 2 || spec.ny < 2 {
            return Err(Error::config(format!(
                "need nx, ny >= 2 (got nx={}, ny={})",
                spec.nx, spec.ny
            )));
        }
        if !(spec.x_hi > spec.x_lo) || !spec.x_lo.is_finite() || !spec.x_hi.is_finite() {
            return Err(Error::config(format!(
                "x box must have positive extent (x_lo={}, x_hi={})",
                spec.x_lo, spec.x_hi
            )));
        }
        if !(spec.y_max > 0.0) || !spec.y_max.is_finite() {
            return Err(Error::config(format!("slab height must be positive, got {}", spec.y_max)));
        }
        let grading = spec.grading.unwrap_or_else(|| GridSpec::default_grading(a));
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::config(format!("grading must be >= 1, got {grading}")));
        }

        let ny = spec.ny;
        let y: Vec<f64> = (0..=ny)
            .map(|j| {
                if j == ny {
                    spec.y_max
                } else {
                    spec.y_max * (j as f64 / ny as f64).powf(grading)
                }
            })
            .collect();
        let mass_y: Vec<f64> = (0..=ny)
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { 0.5 * (y[j - 1] + y[j]) };
                let hi = if j == ny { y[ny] } else { 0.5 * (y[j] + y[j + 1]) };
                weight_integral(lo, hi, a)
            })
            .collect();
        let hy_inv: Vec<f64> = (0..ny).map(|j| 1.0 / weight_integral(y[j], y[j + 1], -a)).collect();

        let dx = (spec.x_hi - spec.x_lo) / (spec.nx - 1) as f64;
        let dual_1d: Vec<f64> = (0..spec.nx)
            .map(|i| if i == 0 || i == spec.nx - 1 { 0.5 * dx } else { dx })
            .collect();
        let n_x = spec.nx.pow(spec.n as u32);
        let xmeas: Vec<f64> = (0..n_x)
            .map(|ix| {
                let mut m = 1.0;
                let mut rem = ix;
                for _ in 0..spec.n {
                    m *= dual_1d[rem % spec.nx];
                    rem /= spec.nx;
                }
                m
            })
            .collect();

        let grid = ExtensionGrid {
            spec: spec.clone(),
            a,
            grading,
            dx,
            y,
            mass_y,
            hy_inv,
            dual_1d,
            xmeas,
            n_x,
            trace_cache: OnceLock::new(),
        };
        for w in grid.hy_inv.iter().chain(&grid.mass_y) {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::config("grid produced a non-positive or non-finite weight"));
            }
        }
        Ok(Arc::new(grid))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn x_coord(&self, i: usize) -> f64 {
        if i == self.spec.nx - 1 {
            self.spec.x_hi
        } else {
            self.spec.x_lo + i as f64 * self.dx
        }
    }

    /// Number of horizontal positions (`nx^n`).
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn node_count(&self) -> usize {
        self.n_x * (self.spec.ny + 1)
    }

    pub fn index(&self, ix: usize, j: usize) -> usize {
        j * self.n_x + ix
    }

    /// Splits a node index into horizontal position and row.
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx % self.n_x, idx / self.n_x)
    }

    /// Per-axis indices of a horizontal position.
    pub fn axis_indices(&self, ix: usize) -> [usize; 2] {
        let nx = self.spec.nx;
        if self.spec.n == 1 {
            [ix, 0]
        } else {
            [ix % nx, ix / nx]
        }
    }

    pub fn position_from_axes(&self, axes: &[usize]) -> usize {
        axes.iter().rev().fold(0, |acc, &i| acc * self.spec.nx + i)
    }

    /// Coordinates of a horizontal position.
    pub fn x_of(&self, ix: usize) -> Vec<f64> {
        let ax = self.axis_indices(ix);
        ax[..self.spec.n].iter().map(|&i| self.x_coord(i)).collect()
    }

    /// Dual measure of horizontal position `ix`.
    pub fn x_measure(&self, ix: usize) -> f64 {
        self.xmeas[ix]
    }

    /// `∫ t^a` over the vertical dual cell of row `j`.
    pub fn row_mass(&self, j: usize) -> f64 {
        self.mass_y[j]
    }

    pub(crate) fn hy_inv(&self) -> &[f64] {
        &self.hy_inv
    }

    pub(crate) fn mass_y(&self) -> &[f64] {
        &self.mass_y
    }

    /// Whether horizontal position `ix` lies on the side boundary of the box.
    pub fn on_side(&self, ix: usize) -> bool {
        let nx = self.spec.nx;
        self.axis_indices(ix)[..self.spec.n]
            .iter()
            .any(|&i| i == 0 || i == nx - 1)
    }

    /// Nodes of `Γ`: the top row and the side walls (closure, row 0 included).
    pub fn is_gamma(&self, idx: usize) -> bool {
        let (ix, j) = self.split(idx);
        j == self.spec.ny || self.on_side(ix)
    }

    /// Nodes of `Σ`: row 0 away from the side walls.
    pub fn is_sigma(&self, idx: usize) -> bool {
        let (ix, j) = self.split(idx);
        j == 0 && !self.on_side(ix)
    }

    /// Indices of all `Σ` nodes in increasing order.
    pub fn sigma_nodes(&self) -> Vec<usize> {
        (0..self.n_x).filter(|&ix| !self.on_side(ix)).collect()
    }

    /// Boundary node nearest to `x` (clamped into the box).
    pub fn nearest_boundary_node(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.spec.n {
            return Err(Error::usage("point dimension does not match the grid"));
        }
        let axes: Vec<usize> = x
            .iter()
            .map(|&xi| {
                let t = ((xi - self.spec.x_lo) / self.dx).round();
                t.clamp(0.0, (self.spec.nx - 1) as f64) as usize
            })
            .collect();
        Ok(self.position_from_axes(&axes))
    }

    /// Calls `f(p, q, w)` for every edge.
    pub fn for_each_edge<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let nx = self.spec.nx;
        let n = self.spec.n;
        let ny = self.spec.ny;
        for j in 0..=ny {
            let base = j * self.n_x;
            for ix in 0..self.n_x {
                let ax = self.axis_indices(ix);
                let p = base + ix;
                // horizontal edges, one per axis
                let mut stride = 1;
                for k in 0..n {
                    if ax[k] + 1 < nx {
                        let trans = if n == 1 { 1.0 } else { self.dual_1d[ax[1 - k]] };
                        f(p, p + stride, self.mass_y[j] * trans / self.dx);
                    }
                    stride *= nx;
                }
                if j < ny {
                    f(p, p + self.n_x, self.xmeas[ix] * self.hy_inv[j]);
                }
            }
        }
    }

    /// Neighbors and weights of node `p`.
    pub fn neighbors(&self, p: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let nx = self.spec.nx;
        let n = self.spec.n;
        let (ix, j) = self.split(p);
        let ax = self.axis_indices(ix);
        let mut stride = 1;
        for k in 0..n {
            let trans = if n == 1 { 1.0 } else { self.dual_1d[ax[1 - k]] };
            let w = self.mass_y[j] * trans / self.dx;
            if ax[k] > 0 {
                out.push((p - stride, w));
            }
            if ax[k] + 1 < nx {
                out.push((p + stride, w));
            }
            stride *= nx;
        }
        if j > 0 {
            out.push((p - self.n_x, self.xmeas[ix] * self.hy_inv[j - 1]));
        }
        if j < self.spec.ny {
            out.push((p + self.n_x, self.xmeas[ix] * self.hy_inv[j]));
        }
    }

    /// `(A u)_p = Σ_q W_pq (u_p - u_q)`, the gradient of the energy.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.for_each_edge(|p, q, w| {
            let d = w * (u[p] - u[q]);
            out[p] += d;
            out[q] -= d;
        });
        out
    }

    /// Diagonal of the energy Hessian.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.node_count()];
        self.for_each_edge(|p, q, w| {
            d[p] += w;
            d[q] += w;
        });
        d
    }

    pub(crate) fn trace_cache(&self) -> &OnceLock<Arc<crate::vi::trace::TraceOperator>> {
        &self.trace_cache
    }

    fn check(&self, field: &Field) -> Result<()> {
        if !std::ptr::eq(field.grid.as_ref(), self) && *field.grid != *self {
            return Err(Error::usage("field belongs to a different grid"));
        }
        Ok(())
    }

    /// Discrete `𝒥(u) = ½ Σ_edges W (Δu)²`.
    pub fn energy(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        Ok(self.energy_of(&field.values))
    }

    pub(crate) fn energy_of(&self, u: &[f64]) -> f64 {
        let mut e = 0.0;
        self.for_each_edge(|p, q, w| {
            let d = u[p] - u[q];
            e += w * d * d;
        });
        0.5 * e
    }

    /// Discrete `∫_D y^a u² dx dy` (the squared weighted L² norm).
    pub fn weighted_l2_norm(&self, field: &Field) -> Result<f64> {
        self.check(field)?;
        Ok(self.weighted_l2_of(&field.values))
    }

    pub(crate) fn weighted_l2_of(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..=self.spec.ny {
            let mut row = 0.0;
            for ix in 0..self.n_x {
                let v = u[j * self.n_x + ix];
                row += self.xmeas[ix] * v * v;
            }
            acc += self.mass_y[j] * row;
        }
        acc
    }

    /// Discrete `lim y^a ∂_y u` at every row-0 node: `-(A u)_p` divided by the
    /// node's dual measure. Summing `flux · measure` recovers the variational
    /// boundary term.
    pub fn boundary_flux(&self, field: &Field) -> Result<Vec<f64>> {
        self.check(field)?;
        let au = self.apply(&field.values);
        Ok((0..self.n_x).map(|ix| -au[ix] / self.xmeas[ix]).collect())
    }

    /// Integrated divergence `div(y^a ∇u)` over each node's dual cell, i.e.
    /// `-(A u)_p` off row 0 and zero on row 0 (absorbed by the flux).
    ///
    /// With these conventions, for fields vanishing on `Γ`:
    /// `Σ_edges W Δu Δv = -Σ_p v_p div_p - Σ_{row 0} v_p flux_p |dual_p|`.
    pub fn divergence(&self, field: &Field) -> Result<Vec<f64>> {
        self.check(field)?;
        let mut au = self.apply(&field.values);
        for (p, v) in au.iter_mut().enumerate() {
            *v = if p < self.n_x { 0.0 } else { -*v };
        }
        Ok(au)
    }

    /// Bilinear form `Σ_edges W (u_p - u_q)(v_p - v_q)`.
    pub fn bilinear(&self, u: &Field, v: &Field) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let mut acc = 0.0;
        self.for_each_edge(|p, q, w| acc += w * (u.values[p] - u.values[q]) * (v.values[p] - v.values[q]));
        Ok(acc)
    }

    /// Multilinear interpolation of nodal values at `(x, y)`; points outside
    /// the slab are clamped to it.
    pub fn interpolate(&self, values: &[f64], x: &[f64], y: f64) -> f64 {
        let nx = self.spec.nx;
        let mut lo = [0usize; 2];
        let mut t = [0.0f64; 2];
        for k in 0..self.spec.n {
            let s = ((x[k] - self.spec.x_lo) / self.dx).clamp(0.0, (nx - 1) as f64);
            let i = (s.floor() as usize).min(nx - 2);
            lo[k] = i;
            t[k] = s - i as f64;
        }
        let yc = y.clamp(0.0, self.spec.y_max);
        let jj = match self.y.binary_search_by(|v| v.partial_cmp(&yc).unwrap()) {
            Ok(j) => j.min(self.spec.ny - 1),
            Err(j) => j.saturating_sub(1).min(self.spec.ny - 1),
        };
        let ty = (yc - self.y[jj]) / (self.y[jj + 1] - self.y[jj]);
        let corners = 1usize << self.spec.n;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut axes = [0usize; 2];
            for k in 0..self.spec.n {
                let bit = (c >> k) & 1;
                axes[k] = lo[k] + bit;
                w *= if bit == 1 { t[k] } else { 1.0 - t[k] };
            }
            let ix = self.position_from_axes(&axes[..self.spec.n]);
            let v0 = values[self.index(ix, jj)];
            let v1 = values[self.index(ix, jj + 1)];
            acc += w * ((1.0 - ty) * v0 + ty * v1);
        }
        acc
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<ExtensionGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Arc<ExtensionGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::usage(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::usage(format!("field value at node {p} is not finite")));
        }
        Ok(Field { grid: Arc::clone(grid), values })
    }

    pub fn zeros(grid: &Arc<ExtensionGrid>) -> Self {
        Field { grid: Arc::clone(grid), values: vec![0.0; grid.node_count()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn<F: FnMut(&[f64], f64) -> f64>(grid: &Arc<ExtensionGrid>, mut f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.node_count());
        let xs: Vec<Vec<f64>> = (0..grid.n_x()).map(|ix| grid.x_of(ix)).collect();
        for j in 0..=grid.ny() {
            let y = grid.y_nodes()[j];
            for x in &xs {
                values.push(f(x, y));
            }
        }
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<ExtensionGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row-0 values.
    pub fn trace(&self) -> &[f64] {
        &self.values[..self.grid.n_x()]
    }

    pub fn sample(&self, x: &[f64], y: f64) -> f64 {
        self.grid.interpolate(&self.values, x, y)
    }

    /// Interpolates onto another grid.
    pub fn resample(&self, target: &Arc<ExtensionGrid>) -> Result<Field> {
        if target.n() != self.grid.n() {
            return Err(Error::usage("cannot resample across dimensions"));
        }
        Field::from_fn(target, |x, y| self.sample(x, y))
    }

    /// Node-ordered CSV (`i,j,x,y,value`; in two dimensions
    /// `i0,i1,j,x0,x1,y,value`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        if g.n() == 1 {
            writeln!(w, "i,j,x,y,value")?;
        } else {
            writeln!(w, "i0,i1,j,x0,x1,y,value")?;
        }
        for j in 0..=g.ny() {
            let y = g.y_nodes()[j];
            for ix in 0..g.n_x() {
                let v = self.values[g.index(ix, j)];
                let ax = g.axis_indices(ix);
                if g.n() == 1 {
                    writeln!(w, "{},{},{},{},{}", ax[0], j, g.x_coord(ax[0]), y, v)?;
                } else {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        ax[0],
                        ax[1],
                        j,
                        g.x_coord(ax[0]),
                        g.x_coord(ax[1]),
                        y,
                        v
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Reads a field written by [`Field::write_csv`] back onto `grid`.
    pub fn read_csv<R: std::io::BufRead>(grid: &Arc<ExtensionGrid>, r: R) -> Result<Field> {
        let mut values = vec![f64::NAN; grid.node_count()];
        let mut lines = r.lines();
        lines.next().transpose()?;
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse_idx = |s: &str| -> Result<usize> {
                s.trim().parse().map_err(|_| Error::usage(format!("bad index {s:?}")))
            };
            let (ix, j, v) = if grid.n() == 1 {
                if cols.len() != 5 {
                    return Err(Error::usage("expected 5 columns"));
                }
                (parse_idx(cols[0])?, parse_idx(cols[1])?, cols[4])
            } else {
                if cols.len() != 7 {
                    return Err(Error::usage("expected 7 columns"));
                }
                let ix = grid.position_from_axes(&[parse_idx(cols[0])?, parse_idx(cols[1])?]);
                (ix, parse_idx(cols[2])?, cols[6])
            };
            if ix >= grid.n_x() || j > grid.ny() {
                return Err(Error::usage("node index out of range"));
            }
            values[grid.index(ix, j)] =
                v.trim().parse().map_err(|_| Error::usage(format!("bad value {v:?}")))?;
        }
        Field::new(grid, values)
    }
}

impl std::ops::Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        Field { grid: Arc::clone(&self.grid), values }
    }
}

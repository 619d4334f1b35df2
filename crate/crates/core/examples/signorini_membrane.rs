//! Classical thin obstacle (`n = 2`, `s = 1/2`): a harmonic membrane over a
//! dome-shaped obstacle on the bottom face.

use fracperf::grid::{ExtensionGrid, GridSpec};
use fracperf::numerics::FractionalOrder;
use fracperf::vi::{residual_report, solve, SolveOptions, ViProblem};

fn main() -> fracperf::Result<()> {
    let order = FractionalOrder::new(2, 0.5)?;
    let nx = 33;
    let dx = 1.0 / (nx - 1) as f64;
    let spec = GridSpec { n: 2, x_lo: 0.0, x_hi: 1.0, nx, y_max: 0.5, ny: GridSpec::matched_ny(0.5, dx, 1.0), grading: None };
    let grid = ExtensionGrid::new(&spec, order.a())?;
    let mut problem = ViProblem::new(&grid);
    for i in grid.sigma_nodes() {
        let x = grid.x_of(i);
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        problem.set_lower_bound(i, 0.3 - 4.0 * r2)?;
    }
    let sol = solve(&problem, &SolveOptions::default().with_tol(1e-10))?;
    let report = residual_report(&problem, &sol.field, 1e-8)?;
    println!("engine {:?}, iterations {}, kkt {:.2e}", sol.engine, sol.iterations, sol.kkt_residual);
    println!("energy {:.6}, contact nodes {}, clean report {}", sol.energy, sol.contact_nodes.len(), report.is_clean());
    let mid = nx / 2;
    for ix in (0..nx).step_by(4) {
        let i = grid.index(grid.position_from_axes(&[ix, mid]), 0);
        println!("    x = {:.3}: u = {:.5}", ix as f64 * dx, sol.field.values()[i]);
    }
    Ok(())
}

//! Command-line front end: `capacity`, `cell`, `solve`, `effective`, `study`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 failed `--check` gate.

use crate::capacity::{estimate_capacity, far_field_check, CapacityEstimate, CapacityParams, FarFieldReport};
use crate::cell::{estimate_alpha0, estimate_ell, EllSample};
use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::homogenize::{
    decreasing_with_slack, effective_problem, perforated_problem, resolve_alpha0, run_study, write_rows_csv,
    StudyConfig,
};
use crate::numerics::NormalizationConstants;
use crate::vi::{residual_report, solve, SolveOptions};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fracperf", version, about = "Fractional obstacle problems in perforated domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity of a set, its scaling under dilation, and the far field.
    Capacity(Common),
    /// Contact density and the effective coefficient from the cell problem.
    Cell(Common),
    /// One perforated solve (`study` section plus `solve: {eps, seed}`).
    Solve(Common),
    /// The effective penalty problem of a study.
    Effective(Common),
    /// Full ε-sweep against the effective solution.
    Study(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: the config's `out`, else `fracperf-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: the config's `threads`, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Turn the acceptance thresholds into a pass/fail exit code.
    #[arg(long)]
    pub check: bool,
}

/// Outcome of a subcommand that ran to completion.
struct Outcome {
    failures: Vec<String>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (common, which) = match &cli.command {
        Command::Capacity(c) => (c, "capacity"),
        Command::Cell(c) => (c, "cell"),
        Command::Solve(c) => (c, "solve"),
        Command::Effective(c) => (c, "effective"),
        Command::Study(c) => (c, "study"),
    };
    match dispatch(which, common) {
        Ok(out) if out.failures.is_empty() => EXIT_OK,
        Ok(out) => {
            for f in &out.failures {
                eprintln!("check failed: {f}");
            }
            EXIT_CHECK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

fn dispatch(which: &str, common: &Common) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(&common.config)?;
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("fracperf-out"));
    let threads = common.threads.or(cfg.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {threads} threads: {e}")))?;
    fs::create_dir_all(&out).map_err(|e| Error::config(format!("cannot create {}: {e}", out.display())))?;
    pool.install(|| match which {
        "capacity" => cmd_capacity(&cfg, &out, common.check),
        "cell" => cmd_cell(&cfg, &out, common.check),
        "solve" => cmd_solve(&cfg, &out, common.check),
        "effective" => cmd_effective(&cfg, &out, common.check),
        _ => cmd_study(&cfg, &out, common.check),
    })
}

/// Pretty JSON with sorted keys and a `version` field.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut v {
        map.insert("version".into(), json!(SCHEMA_VERSION));
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_sorted_json(value)?)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn cmd_capacity(cfg: &ExperimentConfig, out: &Path, check: bool) -> Result<Outcome> {
    let c = cfg.capacity()?;
    c.set.validate()?;
    if c.nodes_across == 0 {
        return Err(Error::config("nodes_across must be positive"));
    }
    let constants = NormalizationConstants::for_order(&c.order);
    let d = c.set.diameter();
    let params_for = |factor: f64| {
        let mut p = CapacityParams::for_set(&c.set, c.nodes_across);
        p.r_out = c.r_out_factors.iter().map(|f| f * d * factor).collect();
        p.tol = c.tol;
        p
    };
    let params = params_for(1.0);
    let base = estimate_capacity(&c.set, &c.order, &params)?;
    let scaled = if c.scaling { Some(estimate_capacity(&c.set.scaled(2.0), &c.order, &params_for(2.0))?) } else { None };
    let far = if c.far_field.is_empty() {
        None
    } else {
        let probes: Vec<f64> = c.far_field.iter().map(|f| f * d).collect();
        Some(far_field_check(&c.set, &c.order, &constants, &params, &probes)?)
    };

    let mut w = create(&out.join("capacity.csv"))?;
    writeln!(w, "set,r_out,spacing,nx,ny,energy,capacity,extrapolated")?;
    let mut rows = |name: &str, est: &CapacityEstimate| -> Result<()> {
        for r in &est.raw {
            writeln!(w, "{name},{},{},{},{},{},{},{}", r.r_out, r.spacing, r.nx, r.ny, r.energy, r.capacity, est.value)?;
        }
        Ok(())
    };
    rows("base", &base)?;
    if let Some(s) = &scaled {
        rows("scaled", s)?;
    }
    w.flush()?;

    let expected = 2f64.powf(c.order.ext_exp());
    let ratio = scaled.as_ref().map(|s| s.value / base.value);
    let mut w = create(&out.join("scaling.csv"))?;
    writeln!(w, "quantity,value,expected")?;
    writeln!(w, "capacity,{},", base.value)?;
    if let (Some(s), Some(r)) = (&scaled, ratio) {
        writeln!(w, "capacity_scaled,{},", s.value)?;
        writeln!(w, "ratio,{r},{expected}")?;
    }
    w.flush()?;
    if let Some(f) = &far {
        f.write_csv(create(&out.join("far_field.csv"))?)?;
    }

    #[derive(Serialize)]
    struct Report<'a> {
        capacity: f64,
        capacity_scaled: Option<f64>,
        ratio: Option<f64>,
        expected_ratio: f64,
        far_field: Option<&'a FarFieldReport>,
        config: &'a crate::config::CapacityConfig,
    }
    write_json(
        &out.join("report.json"),
        &Report {
            capacity: base.value,
            capacity_scaled: scaled.as_ref().map(|s| s.value),
            ratio,
            expected_ratio: expected,
            far_field: far.as_ref(),
            config: &c,
        },
    )?;
    println!("capacity {:.6}", base.value);
    if let Some(r) = ratio {
        println!("ratio {r:.5} (expected {expected:.5})");
    }

    let mut failures = Vec::new();
    if check {
        if let Some(r) = ratio {
            if !((r / expected - 1.0).abs() <= 0.05) {
                failures.push(format!("scaling ratio {r} not within 5% of {expected}"));
            }
        }
        if let Some(last) = far.as_ref().and_then(|f| f.rows.last()) {
            if !(0.9..=1.1).contains(&last.ratio) {
                failures.push(format!("far-field ratio {} outside [0.9, 1.1]", last.ratio));
            }
        }
    }
    Ok(Outcome { failures })
}

fn cmd_cell(cfg: &ExperimentConfig, out: &Path, check: bool) -> Result<Outcome> {
    let c = cfg.cell()?;
    let constants = NormalizationConstants::for_order(&c.order);
    let scan: Vec<EllSample> = c
        .scan
        .iter()
        .map(|&a| estimate_ell(a, c.t, &c.law, &c.order, &constants, &c.params, &c.seeds))
        .collect::<Result<_>>()?;
    let est = estimate_alpha0(&c.law, &c.order, &constants, &c.params, c.t, &c.seeds, &c.search)?;

    let mut w = create(&out.join("ell_curve.csv"))?;
    writeln!(w, "alpha,T,seed,contact_fraction")?;
    for s in scan.iter().chain(&est.samples) {
        for (seed, f) in &s.runs {
            writeln!(w, "{},{},{},{}", s.alpha, s.t, seed, f)?;
        }
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Report<'a> {
        estimate: &'a crate::cell::AlphaEstimate,
        scan: &'a [EllSample],
        config: &'a crate::config::CellConfig,
    }
    write_json(&out.join("alpha0.json"), &Report { estimate: &est, scan: &scan, config: &c })?;
    println!(
        "alpha0 {:.4} bracket [{:.4}, {:.4}] flux balance {:.4}",
        est.alpha0, est.bracket.0, est.bracket.1, est.flux_balance
    );

    let mut failures = Vec::new();
    if check {
        for s in scan.iter().filter(|s| s.alpha < 0.0) {
            if s.runs.iter().any(|r| r.1 != 0.0) {
                failures.push(format!("contact at negative alpha {}", s.alpha));
            }
        }
        if est.flux_balance == 0.0 {
            if !(est.alpha0 <= c.search.tol_alpha) {
                failures.push(format!("alpha0 {} exceeds tol_alpha for a zero law", est.alpha0));
            }
        } else if c.law.is_deterministic() {
            if !(est.alpha0 > 0.0 && (est.alpha0 / est.flux_balance - 1.0).abs() <= 0.25) {
                failures.push(format!("alpha0 {} not within 25% of {}", est.alpha0, est.flux_balance));
            }
        }
    }
    Ok(Outcome { failures })
}

fn solve_target(cfg: &ExperimentConfig) -> Result<(StudyConfig, usize, f64, u64)> {
    let study = cfg.study()?;
    study.validate()?;
    let t = cfg.solve.clone().ok_or_else(|| Error::config("config has no `solve` section"))?;
    let k = study
        .eps
        .iter()
        .position(|&e| e == t.eps)
        .ok_or_else(|| Error::config(format!("solve.eps = {} is not in the study's eps list", t.eps)))?;
    Ok((study, k, t.eps, t.seed))
}

fn cmd_solve(cfg: &ExperimentConfig, out: &Path, check: bool) -> Result<Outcome> {
    let (study, k, eps, seed) = solve_target(cfg)?;
    let grid = study.grid_for(k)?;
    let problem = perforated_problem(&study, &grid, eps, seed)?;
    let sol = solve(&problem, &SolveOptions::default().with_tol(study.tol).with_engine(study.engine))?;
    let holes = crate::perforations::sample(
        &study.law,
        eps,
        &study.domain,
        &study.order,
        &study.constants(),
        seed,
        study.envelope,
    )?;
    holes.write_csv(create(&out.join("perforations.csv"))?)?;
    sol.field.write_csv(create(&out.join("solution.csv"))?)?;
    let report = residual_report(&problem, &sol.field, 10.0 * study.tol)?;
    write_json(
        &out.join("report.json"),
        &json!({
            "eps": eps,
            "seed": seed,
            "energy": sol.objective,
            "iterations": sol.iterations,
            "kkt_residual": sol.kkt_residual,
            "engine": sol.engine,
            "constrained": problem.constrained_nodes().len(),
            "contacts": sol.contact_nodes.len(),
            "flags": report.flags.len(),
            "grid": grid.spec(),
        }),
    )?;
    println!("energy {:.8} contacts {}/{}", sol.objective, sol.contact_nodes.len(), problem.constrained_nodes().len());
    let mut failures = Vec::new();
    if check && !report.is_clean() {
        failures.push(format!("{} nodes violate complementarity", report.flags.len()));
    }
    Ok(Outcome { failures })
}

fn cmd_effective(cfg: &ExperimentConfig, out: &Path, check: bool) -> Result<Outcome> {
    let study = cfg.study()?;
    study.validate()?;
    let alpha0 = resolve_alpha0(&study)?;
    let grid = study.fine_grid()?;
    let problem = effective_problem(&study, &grid, alpha0.value)?;
    let sol = solve(&problem, &SolveOptions::default().with_tol(study.tol).with_engine(study.engine))?;
    sol.field.write_csv(create(&out.join("effective.csv"))?)?;
    write_json(
        &out.join("report.json"),
        &json!({
            "alpha0": alpha0,
            "energy": sol.objective,
            "iterations": sol.iterations,
            "kkt_residual": sol.kkt_residual,
            "engine": sol.engine,
            "grid": grid.spec(),
        }),
    )?;
    println!("alpha0 {:.6} energy {:.8}", alpha0.value, sol.objective);
    let mut failures = Vec::new();
    if check && !(sol.kkt_residual < study.tol) {
        failures.push(format!("KKT residual {} above {}", sol.kkt_residual, study.tol));
    }
    Ok(Outcome { failures })
}

fn cmd_study(cfg: &ExperimentConfig, out: &Path, check: bool) -> Result<Outcome> {
    let study = cfg.study()?;
    let report = match run_study(&study) {
        Ok(r) => r,
        Err(abort) => {
            if !abort.completed.is_empty() {
                write_rows_csv(&abort.completed, create(&out.join("study_partial.csv"))?)?;
            }
            return Err(abort.error);
        }
    };
    report.write_csv(create(&out.join("study.csv"))?)?;
    fs::write(out.join("study.svg"), report.svg())?;
    write_json(&out.join("report.json"), &json!({ "report": report, "config": study }))?;
    for a in &report.aggregates {
        println!(
            "eps {:<8} l2_trace {:.4e} energy_gap {:.4e} contact {:.3}",
            a.eps, a.l2_trace.mean, a.energy_gap.mean, a.contact_frac.mean
        );
    }
    let mut failures = Vec::new();
    if check {
        if study.law.gamma_bar() == 0.0 {
            let worst = report.rows.iter().map(|r| r.l2_trace.max(r.l2_bulk)).fold(0.0, f64::max);
            if !(worst <= 10.0 * study.tol) {
                failures.push(format!("zero law distance {worst} above 10 tol"));
            }
        } else {
            if !decreasing_with_slack(&report.mean_l2_trace(), 0.1) {
                failures.push("trace distance does not decrease along the sweep".into());
            }
            if !decreasing_with_slack(&report.mean_energy_gap(), 0.1) {
                failures.push("energy gap does not decrease along the sweep".into());
            }
        }
    }
    Ok(Outcome { failures })
}

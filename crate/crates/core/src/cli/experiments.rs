//! The solve, omega-sweep and scaling experiments.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::cli::config::{Problem, RunConfig, ScalingConfig, SweepConfig};
use crate::cli::output::{ensure_dir, write_field_dump, write_json, write_record, ExperimentRecord, Metadata};
use crate::cli::CliError;
use crate::homogenization::{average_current, effective_tensor, ColumnSummary};
use crate::material::reference_lambda;
use crate::solvers::{solve, Method, SolveResult, SolverConfig};
use crate::spectral::GreenOperator;

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveReport {
    pub tensor: Vec<Vec<f64>>,
    pub reuss: Vec<Vec<f64>>,
    pub voigt: Vec<Vec<f64>>,
    pub relative_asymmetry: f64,
    pub columns: Vec<ColumnSummary>,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub wall_time: f64,
    pub lambda: f64,
    pub omega: Option<f64>,
    pub counts: Vec<usize>,
    pub unknowns: usize,
    pub volume_fraction: Option<f64>,
    pub mean_field: Vec<f64>,
    pub mean_current: Vec<f64>,
    pub effective_tensor: Option<EffectiveReport>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub rho: f64,
    pub lambda: f64,
    pub iters_cg: usize,
    pub iters_ffth: usize,
    pub ratio: f64,
    pub converged_cg: bool,
    pub converged_ffth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub unknowns: usize,
    pub time_cg: f64,
    pub time_ffth: f64,
    pub iters_cg: usize,
    pub iters_ffth: usize,
    pub per_iter_cg: f64,
    pub per_iter_ffth: f64,
    /// Per-iteration cost of CG over that of FFTH.
    pub per_iter_ratio: f64,
    /// Wall time over that of the previous row; absent on the first row.
    pub time_ratio_cg: Option<f64>,
    pub time_ratio_ffth: Option<f64>,
}

const SWEEP_COLUMNS: [&str; 8] =
    ["omega", "rho", "lambda", "iters_cg", "iters_ffth", "ratio", "converged_cg", "converged_ffth"];

const SCALING_COLUMNS: [&str; 11] = [
    "n",
    "unknowns",
    "time_cg",
    "time_ffth",
    "iters_cg",
    "iters_ffth",
    "per_iter_cg",
    "per_iter_ffth",
    "per_iter_ratio",
    "time_ratio_cg",
    "time_ratio_ffth",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_record(rows: &[SweepRow]) -> ExperimentRecord {
    let mut rec = ExperimentRecord::new(&SWEEP_COLUMNS);
    for r in rows {
        rec.push(vec![
            r.omega.to_string(),
            r.rho.to_string(),
            r.lambda.to_string(),
            r.iters_cg.to_string(),
            r.iters_ffth.to_string(),
            r.ratio.to_string(),
            r.converged_cg.to_string(),
            r.converged_ffth.to_string(),
        ]);
    }
    rec
}

pub fn scaling_record(rows: &[ScalingRow]) -> ExperimentRecord {
    let mut rec = ExperimentRecord::new(&SCALING_COLUMNS);
    for r in rows {
        rec.push(vec![
            r.n.to_string(),
            r.unknowns.to_string(),
            r.time_cg.to_string(),
            r.time_ffth.to_string(),
            r.iters_cg.to_string(),
            r.iters_ffth.to_string(),
            r.per_iter_cg.to_string(),
            r.per_iter_ffth.to_string(),
            r.per_iter_ratio.to_string(),
            opt(r.time_ratio_cg),
            opt(r.time_ratio_ffth),
        ]);
    }
    rec
}

/// `a / b` for iteration counts; equal zero counts give 1.
fn count_ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        if a == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a as f64 / b as f64
    }
}

fn per_iteration(res: &SolveResult) -> f64 {
    res.wall_time / res.iterations.max(1) as f64
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    ensure_dir(&cfg.output.directory)?;
    Ok(cfg.output.directory.join(name))
}

fn dump(path: &Path, e: &crate::grid::RealField) -> Result<(), CliError> {
    write_field_dump(BufWriter::new(File::create(path)?), e)
}

/// Solves the configured problem and writes `result.json`, plus `field.txt`
/// and per-iterate dumps when requested. A run that hits the iteration cap
/// is reported, not raised.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    let p = cfg.problem(None, None)?;
    let green = GreenOperator::new(&p.grid, p.reference.lambda())?;
    let solver = cfg.solver.to_solver_config(cfg.solver.method);
    let res = solve(&p.conductivity, &green, &p.load, &solver)?;

    let effective = if cfg.effective_tensor {
        let columns = SolverConfig { record_iterates: false, ..solver.clone() };
        let eff = effective_tensor(&p.conductivity, &green, &columns)?;
        Some(EffectiveReport {
            tensor: eff.tensor.to_rows(),
            reuss: eff.reuss.to_rows(),
            voigt: eff.voigt.to_rows(),
            relative_asymmetry: eff.relative_asymmetry(),
            columns: eff.columns,
        })
    } else {
        None
    };

    let report = SolveReport {
        method: res.method,
        converged: res.converged,
        iterations: res.iterations,
        final_residual: res.final_residual(),
        residual_history: res.residual_history.clone(),
        wall_time: res.wall_time,
        lambda: p.reference.lambda(),
        omega: p.reference.omega(),
        counts: p.grid.counts().to_vec(),
        unknowns: p.grid.unknowns(),
        volume_fraction: p.conductivity.volume_fraction().ok(),
        mean_field: res.solution.mean(),
        mean_current: average_current(&p.conductivity, &res.solution)?,
        effective_tensor: effective,
        metadata: Metadata::now(cfg.hash()),
    };

    write_json(&out_path(cfg, "result.json")?, &report)?;
    if cfg.output.field_dump {
        dump(&out_path(cfg, "field.txt")?, &res.solution)?;
    }
    if let Some(h) = &res.history {
        let dir = cfg.output.directory.join("iterates");
        ensure_dir(&dir)?;
        for (m, e) in h.iterates.iter().enumerate() {
            dump(&dir.join(format!("e_{m:05}.txt")), e)?;
        }
    }
    Ok(report)
}

/// CG and FFTH iteration counts over a grid of `(rho, omega)` pairs on the
/// configured sphere microstructure. Rows are ordered by `rho`, then `omega`.
pub fn run_sweep_omega(cfg: &RunConfig, omegas: &[f64], rhos: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let counts = cfg.counts()?;
    let grid = cfg.grid_for(&counts)?;
    let load = crate::grid::RealField::constant(&grid, &cfg.load)?;
    let pairs: Vec<(f64, f64)> = rhos.iter().flat_map(|&r| omegas.iter().map(move |&w| (r, w))).collect();
    pairs
        .par_iter()
        .map(|&(rho, omega)| {
            let l = cfg.sphere_on(&grid, rho)?;
            let lambda = reference_lambda(rho, omega)?.lambda();
            let green = GreenOperator::new(&grid, lambda)?;
            let cg = solve(&l, &green, &load, &cfg.solver.to_solver_config(Method::Cg))?;
            let ffth = solve(&l, &green, &load, &cfg.solver.to_solver_config(Method::Ffth))?;
            Ok(SweepRow {
                omega,
                rho,
                lambda,
                iters_cg: cg.iterations,
                iters_ffth: ffth.iterations,
                ratio: count_ratio(cg.iterations, ffth.iterations),
                converged_cg: cg.converged,
                converged_ffth: ffth.converged,
            })
        })
        .collect()
}

/// Times CG and FFTH on `n^d` grids. Every grid is solved `repeats` times in
/// interleaved rounds and the fastest run of each solver is kept.
pub fn run_scaling(cfg: &RunConfig, ns: &[usize], repeats: usize) -> Result<Vec<ScalingRow>, CliError> {
    let problems = ns
        .iter()
        .map(|&n| {
            let p = cfg.problem(Some(n), None)?;
            let green = GreenOperator::new(&p.grid, p.reference.lambda())?;
            Ok((p, green))
        })
        .collect::<Result<Vec<(Problem, GreenOperator)>, CliError>>()?;
    let methods = [Method::Cg, Method::Ffth];
    let mut best: Vec<[Option<SolveResult>; 2]> = vec![[None, None]; ns.len()];
    for _ in 0..repeats.max(1) {
        for ((p, green), slots) in problems.iter().zip(best.iter_mut()) {
            for (method, slot) in methods.iter().zip(slots.iter_mut()) {
                let res = solve(&p.conductivity, green, &p.load, &cfg.solver.to_solver_config(*method))?;
                if slot.as_ref().is_none_or(|b| res.wall_time < b.wall_time) {
                    *slot = Some(res);
                }
            }
        }
    }

    let mut rows: Vec<ScalingRow> = Vec::with_capacity(ns.len());
    for ((&n, (p, _)), [cg, ffth]) in ns.iter().zip(&problems).zip(best) {
        let (cg, ffth) = (cg.expect("at least one round"), ffth.expect("at least one round"));
        let (per_cg, per_ffth) = (per_iteration(&cg), per_iteration(&ffth));
        let prev = rows.last();
        rows.push(ScalingRow {
            n,
            unknowns: p.grid.unknowns(),
            time_cg: cg.wall_time,
            time_ffth: ffth.wall_time,
            iters_cg: cg.iterations,
            iters_ffth: ffth.iterations,
            per_iter_cg: per_cg,
            per_iter_ffth: per_ffth,
            per_iter_ratio: per_cg / per_ffth,
            time_ratio_cg: prev.map(|r| cg.wall_time / r.time_cg),
            time_ratio_ffth: prev.map(|r| ffth.wall_time / r.time_ffth),
        });
    }
    Ok(rows)
}

/// Runs the sweep from the config (or the default lists) and writes `sweep.csv`.
pub fn write_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let SweepConfig { omega, rho } = &sweep;
    let rows = run_sweep_omega(cfg, omega, rho)?;
    write_record(&out_path(cfg, "sweep.csv")?, &sweep_record(&rows), &Metadata::now(cfg.hash()))?;
    Ok(rows)
}

/// Runs the scaling study and writes `scaling.csv`.
pub fn write_scaling(cfg: &RunConfig) -> Result<Vec<ScalingRow>, CliError> {
    let ScalingConfig { n, repeats } = cfg.scaling.clone().unwrap_or_default();
    let rows = run_scaling(cfg, &n, repeats)?;
    write_record(&out_path(cfg, "scaling.csv")?, &scaling_record(&rows), &Metadata::now(cfg.hash()))?;
    Ok(rows)
}

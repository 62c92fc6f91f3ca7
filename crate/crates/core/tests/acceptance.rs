//! End-to-end acceptance criteria. Everything runs inside one test so the
//! timing criterion is not disturbed by concurrently running tests; each
//! criterion prints one PASS/FAIL line (`-- --nocapture` to see them).

use std::time::Instant;

use ffthom::cli::config::RunConfig;
use ffthom::cli::{run_scaling, run_sweep_omega};
use ffthom::grid::{make_grid, GridSpec, RealField};
use ffthom::homogenization::effective_tensor;
use ffthom::material::{contrast_sphere, random_spd_microstructure, reference_lambda, ConductivityField};
use ffthom::solvers::{residual, solve, Method, SolverConfig};
use ffthom::spectral::{assemble_dense, project_e, GreenOperator};
use ffthom::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn unit_load(grid: &GridSpec) -> RealField {
    let mut v = vec![0.0; grid.dim()];
    v[0] = 1.0;
    RealField::constant(grid, &v).unwrap()
}

fn random_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> RealField {
    RealField::from_vec(grid, (0..grid.unknowns()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
}

fn sphere_green(n: usize, rho: f64, omega: f64) -> (ConductivityField, GreenOperator, RealField) {
    let g = GridSpec::unit_cube(3, n).unwrap();
    let l = contrast_sphere(&g, rho).unwrap();
    let green = GreenOperator::new(&g, reference_lambda(rho, omega).unwrap().lambda()).unwrap();
    (l, green, unit_load(&g))
}

/// Largest per-iterate relative distance over the first `count` iterates.
fn iterate_gap(a: &[RealField], b: &[RealField], count: usize) -> f64 {
    assert!(a.len() >= count && b.len() >= count, "fewer than {count} recorded iterates");
    a.iter().zip(b).take(count).map(|(x, y)| x.sub(y).norm() / y.norm()).fold(0.0, f64::max)
}

fn dense_oracle() -> Outcome {
    let start = Instant::now();
    let g = make_grid(2, &[4, 4], &[0.5, 0.5]).unwrap();
    let e0 = unit_load(&g);
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_spd_microstructure(&g, 10.0, &mut rng).unwrap();
        let green = GreenOperator::new(&g, 5.5).unwrap();
        let exact = assemble_dense(&l, &green, Some(&e0)).unwrap().solve(&e0).unwrap();
        for method in [Method::Cg, Method::Ffth] {
            let res = solve(&l, &green, &e0, &SolverConfig::new(method).with_tol(1e-8)).unwrap();
            assert!(res.converged);
            worst = worst.max(res.solution.sub(&exact).norm() / exact.norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 5.0, format!("max relative error {worst:.2e} (<= 1e-6), {secs:.2} s (< 5 s)"))
}

fn projection_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut idem, mut adj) = (0.0f64, 0.0f64);
    for grid in [make_grid(2, &[8, 8], &[0.5, 0.5]).unwrap(), make_grid(3, &[8, 8, 8], &[0.5; 3]).unwrap()] {
        let green = GreenOperator::new(&grid, 3.7).unwrap();
        for _ in 0..10 {
            let (x, y) = (random_field(&grid, &mut rng), random_field(&grid, &mut rng));
            let px = project_e(&x, &green).unwrap();
            idem = idem.max(project_e(&px, &green).unwrap().sub(&px).norm() / x.norm());
            let gap = px.dot(&y) - x.dot(&project_e(&y, &green).unwrap());
            adj = adj.max(gap.abs() / (x.norm() * y.norm()));
        }
    }
    outcome(idem <= 1e-12 && adj <= 1e-12, format!("idempotency {idem:.2e}, self-adjointness {adj:.2e} (<= 1e-12)"))
}

fn lambda_independence() -> Outcome {
    let cfg = SolverConfig::new(Method::Cg).with_tol(1e-6).recording();
    let runs: Vec<_> = [0.3, 0.7]
        .iter()
        .map(|&omega| {
            let (l, green, e0) = sphere_green(16, 10.0, omega);
            solve(&l, &green, &e0, &cfg).unwrap()
        })
        .collect();
    let gap = iterate_gap(&runs[0].history.as_ref().unwrap().iterates, &runs[1].history.as_ref().unwrap().iterates, 10);
    let (a, b) = (runs[0].iterations, runs[1].iterations);
    outcome(
        gap <= 1e-8 && a.abs_diff(b) <= 1 && runs.iter().all(|r| r.converged),
        format!("iterate gap {gap:.2e} (<= 1e-8), iterations {a} vs {b}"),
    )
}

fn cg_bicg() -> Outcome {
    let (l, green, e0) = sphere_green(16, 10.0, 0.5);
    let cg = solve(&l, &green, &e0, &SolverConfig::new(Method::Cg).recording()).unwrap();
    let bicg = solve(&l, &green, &e0, &SolverConfig::new(Method::Bicg).recording()).unwrap();
    let gap = iterate_gap(&bicg.history.unwrap().iterates, &cg.history.unwrap().iterates, 10);
    outcome(gap <= 1e-8, format!("iterate gap {gap:.2e} (<= 1e-8)"))
}

fn sphere_config() -> RunConfig {
    let mut cfg = RunConfig::from_json(
        r#"{ "grid": { "d": 3, "n": 16 },
             "microstructure": { "type": "sphere", "rho": 10.0 },
             "reference": { "omega": 0.5 },
             "load": [1.0, 0.0, 0.0],
             "solver": { "tol": 1e-6, "max_iter": 100000 } }"#,
    )
    .unwrap();
    cfg.validate(false).unwrap();
    cfg.output.directory = std::env::temp_dir();
    cfg
}

fn ratio_reproduction() -> Outcome {
    let cfg = sphere_config();
    let omegas = [0.3, 0.4, 0.5, 0.6, 0.7];
    let rows = run_sweep_omega(&cfg, &omegas, &[10.0, 1000.0]).unwrap();
    let at = |rho: f64, omega: f64| rows.iter().find(|r| r.rho == rho && r.omega == omega).unwrap();
    let (r10, r1000) = (at(10.0, 0.5), at(1000.0, 0.5));
    let ffth: Vec<(f64, Option<usize>)> = omegas
        .iter()
        .map(|&w| {
            let r = at(10.0, w);
            (w, r.converged_ffth.then_some(r.iters_ffth))
        })
        .collect();
    let best = ffth.iter().filter_map(|(w, it)| it.map(|it| (it, *w))).min_by_key(|(it, _)| *it).map(|(_, w)| w);
    let argmin_ok = best.is_some_and(|w| (w - 0.5).abs() <= 0.1 + 1e-12);
    let converged = r10.converged_cg && r10.converged_ffth && r1000.converged_cg && r1000.converged_ffth;
    outcome(
        converged && r10.ratio <= 0.6 && r1000.ratio <= 0.15 && argmin_ok,
        format!(
            "rho=10 ratio {:.3} ({}/{}, <= 0.6), rho=1000 ratio {:.3} ({}/{}, <= 0.15), FFTH counts over omega {:?}, argmin {:?}",
            r10.ratio, r10.iters_cg, r10.iters_ffth, r1000.ratio, r1000.iters_cg, r1000.iters_ffth, ffth, best
        ),
    )
}

fn residual_membership() -> Outcome {
    let (l, green, e0) = sphere_green(16, 10.0, 0.5);
    let res = solve(&l, &green, &e0, &SolverConfig::new(Method::Cg).with_tol(1e-6).recording()).unwrap();
    let history = res.history.unwrap();
    let mut worst = 0.0f64;
    for r in &history.residuals {
        worst = worst.max(r.sub(&project_e(r, &green).unwrap()).norm() / r.norm());
    }
    outcome(worst <= 1e-10, format!("{} residuals, worst defect {worst:.2e} (<= 1e-10)", history.residuals.len()))
}

fn homogeneous_case() -> Outcome {
    let g = GridSpec::unit_cube(3, 8).unwrap();
    let lambda = 3.0;
    let l = ConductivityField::homogeneous(&g, Tensor::scaled_identity(3, lambda)).unwrap();
    let green = GreenOperator::new(&g, lambda).unwrap();
    let e0 = unit_load(&g);
    let mut ok = true;
    let mut detail = Vec::new();
    for method in [Method::Cg, Method::Ffth] {
        let res = solve(&l, &green, &e0, &SolverConfig::new(method)).unwrap();
        let r = residual(&l, &green, &e0, &res.solution).unwrap().norm() / e0.norm();
        ok &= res.iterations == 0 && res.solution == e0 && r <= 1e-14;
        detail.push(format!("{}: {} iterations, residual {r:.1e}", method.name(), res.iterations));
    }
    outcome(ok, detail.join(", "))
}

fn physics_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probes: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for rho in [10.0, 100.0] {
        let (l, green, e0) = sphere_green(16, rho, 0.5);
        let cfg = SolverConfig::new(Method::Cg).with_tol(1e-8);
        let eff = effective_tensor(&l, &green, &cfg).unwrap();
        let asym = eff.relative_asymmetry();
        let margin = eff.bound_margin(&probes);
        let sol = solve(&l, &green, &e0, &cfg).unwrap().solution;
        let mean = sol.mean();
        let mean_err = (mean[0] - 1.0).abs().max(mean[1].abs()).max(mean[2].abs());
        ok &= asym <= 1e-6 && margin >= -1e-6 && mean_err <= 1e-10;
        detail.push(format!("rho={rho}: asymmetry {asym:.1e}, bound margin {margin:.2e}, mean error {mean_err:.1e}"));
    }
    outcome(ok, detail.join("; "))
}

fn scaling_shape() -> Outcome {
    let cfg = sphere_config();
    let rows = run_scaling(&cfg, &[8, 16, 32], 7).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &rows {
        ok &= (0.5..=2.0).contains(&r.per_iter_ratio);
        if let (Some(c), Some(f)) = (r.time_ratio_cg, r.time_ratio_ffth) {
            ok &= c <= 12.0 && f <= 12.0;
        }
        detail.push(format!(
            "n={}: cg {:.3}s/{} it, ffth {:.3}s/{} it, per-iteration ratio {:.2}, time ratios {:?}/{:?}",
            r.n, r.time_cg, r.iters_cg, r.time_ffth, r.iters_ffth, r.per_iter_ratio, r.time_ratio_cg, r.time_ratio_ffth
        ));
    }
    outcome(ok, detail.join("; "))
}

fn geometry() -> Outcome {
    let g = GridSpec::unit_cube(3, 64).unwrap();
    let vf = contrast_sphere(&g, 10.0).unwrap().volume_fraction().unwrap();
    outcome((vf - 0.25).abs() <= 0.01, format!("volume fraction {vf:.5} (0.25 +- 0.01)"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("dense-oracle equivalence", dense_oracle),
        ("projection suite", projection_suite),
        ("lambda independence", lambda_independence),
        ("CG equals BiCG", cg_bicg),
        ("iteration ratio reproduction", ratio_reproduction),
        ("residual subspace membership", residual_membership),
        ("homogeneous degenerate case", homogeneous_case),
        ("physics sanity", physics_sanity),
        ("scaling shape", scaling_shape),
        ("geometry", geometry),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} {}: {} | {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

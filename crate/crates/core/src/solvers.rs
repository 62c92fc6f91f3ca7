//! Iterative solvers for `(I + B) e = e0`.
//!
//! All three methods share one stopping rule, the relative system residual
//! `|e0 - (I + B) e| / |e0| <= tol`, so their iteration counts can be compared
//! directly. Each iteration costs one application of `I + B` (two for BiCG,
//! which also needs the transpose).
//!
//! * FFTH is the fixed-point recurrence `e_(m+1) = e0 - B e_(m)`, i.e. the
//!   partial sums of the Neumann series of `(I + B)^-1` applied to `e0`.
//! * CG is the textbook recurrence with the Euclidean inner product, applied
//!   as is to the non-symmetric operator. Started from `e0 + E`, every
//!   residual and search direction stays in the compatible subspace `E`, where
//!   the operator is symmetric positive definite, and the iterates do not
//!   depend on the reference conductivity.
//! * BiCG with the shadow residual started equal to the residual reproduces
//!   the CG iterates.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::material::{apply_conductivity, ConductivityField};
use crate::spectral::{project_e, GreenOperator, SystemOperator, Workspace};

/// Largest relative defect `|(I - P_E) x| / |x|` accepted for an initial
/// perturbation.
pub const SUBSPACE_TOLERANCE: f64 = 1e-10;

/// Relative residual above which the fixed-point scheme is stopped as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ffth,
    Cg,
    Bicg,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ffth => "ffth",
            Method::Cg => "cg",
            Method::Bicg => "bicg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ffth" => Ok(Method::Ffth),
            "cg" => Ok(Method::Cg),
            "bicg" => Ok(Method::Bicg),
            other => Err(format!("unknown method {other:?} (expected ffth, cg or bicg)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub record_iterates: bool,
    /// Starting offset `e_(0) = e0 + perturbation` for the Krylov methods;
    /// must lie in `E`.
    pub initial_perturbation: Option<RealField>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: Method::Cg, tol: 1e-6, max_iter: 10_000, record_iterates: false, initial_perturbation: None }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig { method, ..Default::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Snapshots taken at every iteration when recording is enabled. Index `m`
/// holds the iterate `e_(m)` and its residual `r_(m)`.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub iterates: Vec<RealField>,
    pub residuals: Vec<RealField>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub method: Method,
    pub solution: RealField,
    pub iterations: usize,
    /// `|r_(m)| / |e0|` for `m = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub history: Option<History>,
    /// Seconds spent in the iteration loop.
    pub wall_time: f64,
    pub converged: bool,
}

impl SolveResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("residual history is never empty")
    }

    /// Turns a non-converged result into [`Error::NotConverged`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.final_residual() })
        }
    }
}

/// Bookkeeping shared by the three loops.
struct Tracker {
    norm0: f64,
    tol: f64,
    residuals: Vec<f64>,
    history: Option<History>,
}

impl Tracker {
    fn new(e0: &RealField, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let norm0 = e0.norm();
        if norm0 == 0.0 {
            return Err(Error::InvalidParameter("macroscopic load must be non-zero".into()));
        }
        Ok(Tracker {
            norm0,
            tol: cfg.tol,
            residuals: Vec::new(),
            history: cfg.record_iterates.then(History::default),
        })
    }

    /// Records iterate `m`; returns true once the stopping rule holds.
    fn record(&mut self, iterate: &RealField, residual: &RealField, residual_norm: f64) -> bool {
        let rel = residual_norm / self.norm0;
        self.residuals.push(rel);
        if let Some(h) = self.history.as_mut() {
            h.iterates.push(iterate.clone());
            h.residuals.push(residual.clone());
        }
        rel <= self.tol
    }

    fn finish(self, method: Method, solution: RealField, iterations: usize, converged: bool, start: Instant) -> SolveResult {
        SolveResult {
            method,
            solution,
            iterations,
            residual_history: self.residuals,
            history: self.history,
            wall_time: start.elapsed().as_secs_f64(),
            converged,
        }
    }
}

fn check_inputs(l: &ConductivityField, g: &GreenOperator, e0: &RealField) -> Result<()> {
    if l.grid() != g.grid() || e0.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `e0 - (I + B) e`.
pub fn residual(l: &ConductivityField, g: &GreenOperator, e0: &RealField, e: &RealField) -> Result<RealField> {
    let op = SystemOperator::new(l, g)?;
    Ok(e0.sub(&op.apply(e)?))
}

/// Dispatches on `cfg.method`.
pub fn solve(l: &ConductivityField, g: &GreenOperator, e0: &RealField, cfg: &SolverConfig) -> Result<SolveResult> {
    match cfg.method {
        Method::Ffth => solve_ffth(l, g, e0, cfg),
        Method::Cg => solve_cg(l, g, e0, cfg),
        Method::Bicg => solve_bicg(l, g, e0, cfg),
    }
}

/// Fixed-point (Neumann series) iteration started from `e0`.
pub fn solve_ffth(l: &ConductivityField, g: &GreenOperator, e0: &RealField, cfg: &SolverConfig) -> Result<SolveResult> {
    check_inputs(l, g, e0)?;
    let op = SystemOperator::new(l, g)?;
    let mut track = Tracker::new(e0, cfg)?;
    let mut ws = Workspace::new(g.grid());
    let start = Instant::now();

    let mut e = e0.clone();
    let mut next = RealField::zeros(g.grid());
    let mut r = RealField::zeros(g.grid());
    let mut m = 0;
    loop {
        op.apply_b_into(&e, &mut next, &mut ws)?;
        // next = e0 - B e_(m); the residual of e_(m) is next - e_(m)
        for (((nx, ri), &c), &ei) in next.data_mut().iter_mut().zip(r.data_mut()).zip(e0.data()).zip(e.data()) {
            *nx = c - *nx;
            *ri = *nx - ei;
        }
        let r_norm = r.norm();
        if track.record(&e, &r, r_norm) {
            return Ok(track.finish(Method::Ffth, e, m, true, start));
        }
        if m == cfg.max_iter || !(r_norm <= DIVERGENCE_LIMIT * track.norm0) {
            return Ok(track.finish(Method::Ffth, e, m, false, start));
        }
        std::mem::swap(&mut e, &mut next);
        m += 1;
    }
}

fn krylov_start(g: &GreenOperator, e0: &RealField, cfg: &SolverConfig) -> Result<RealField> {
    let mut x = e0.clone();
    if let Some(pert) = &cfg.initial_perturbation {
        pert.check_same_grid(e0)?;
        let norm = pert.norm();
        if norm > 0.0 {
            let defect = pert.sub(&project_e(pert, g)?).norm() / norm;
            if defect > SUBSPACE_TOLERANCE {
                return Err(Error::InitialVectorNotInE { ratio: defect });
            }
        }
        x.axpy(1.0, pert);
    }
    Ok(x)
}

/// Conjugate gradients on the non-symmetric system.
pub fn solve_cg(l: &ConductivityField, g: &GreenOperator, e0: &RealField, cfg: &SolverConfig) -> Result<SolveResult> {
    check_inputs(l, g, e0)?;
    let op = SystemOperator::new(l, g)?;
    let mut track = Tracker::new(e0, cfg)?;
    let mut x = krylov_start(g, e0, cfg)?;
    let mut ws = Workspace::new(g.grid());
    let mut ap = RealField::zeros(g.grid());
    let start = Instant::now();

    op.apply_into(&x, &mut ap, &mut ws)?;
    let mut r = e0.sub(&ap);
    let mut rr = r.dot(&r);
    if track.record(&x, &r, rr.sqrt()) {
        return Ok(track.finish(Method::Cg, x, 0, true, start));
    }
    let mut p = r.clone();
    for m in 1..=cfg.max_iter {
        op.apply_into(&p, &mut ap, &mut ws)?;
        let curvature = p.dot(&ap);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown { iteration: m, curvature });
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_next = r.dot(&r);
        if track.record(&x, &r, rr_next.sqrt()) {
            return Ok(track.finish(Method::Cg, x, m, true, start));
        }
        p.xpby(&r, rr_next / rr);
        rr = rr_next;
    }
    Ok(track.finish(Method::Cg, x, cfg.max_iter, false, start))
}

/// Biconjugate gradients with the shadow residual started at the residual.
pub fn solve_bicg(l: &ConductivityField, g: &GreenOperator, e0: &RealField, cfg: &SolverConfig) -> Result<SolveResult> {
    check_inputs(l, g, e0)?;
    let op = SystemOperator::new(l, g)?;
    let mut track = Tracker::new(e0, cfg)?;
    let mut x = krylov_start(g, e0, cfg)?;
    let mut ws = Workspace::new(g.grid());
    let mut ap = RealField::zeros(g.grid());
    let mut atp = RealField::zeros(g.grid());
    let start = Instant::now();

    op.apply_into(&x, &mut ap, &mut ws)?;
    let mut r = e0.sub(&ap);
    if track.record(&x, &r, r.norm()) {
        return Ok(track.finish(Method::Bicg, x, 0, true, start));
    }
    let mut shadow = r.clone();
    let mut p = r.clone();
    let mut p_shadow = shadow.clone();
    let mut rho = shadow.dot(&r);
    for m in 1..=cfg.max_iter {
        op.apply_into(&p, &mut ap, &mut ws)?;
        op.apply_transpose_into(&p_shadow, &mut atp, &mut ws)?;
        let curvature = p_shadow.dot(&ap);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown { iteration: m, curvature });
        }
        let alpha = rho / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        shadow.axpy(-alpha, &atp);
        if track.record(&x, &r, r.norm()) {
            return Ok(track.finish(Method::Bicg, x, m, true, start));
        }
        let rho_next = shadow.dot(&r);
        if rho_next == 0.0 || !rho_next.is_finite() {
            return Err(Error::Breakdown { iteration: m, curvature: rho_next });
        }
        let beta = rho_next / rho;
        p.xpby(&r, beta);
        p_shadow.xpby(&shadow, beta);
        rho = rho_next;
    }
    Ok(track.finish(Method::Bicg, x, cfg.max_iter, false, start))
}

/// `1/2 <L f, f> + <L e0, f>` with `f = e - e0`; CG decreases it monotonically.
pub fn quadratic_energy(l: &ConductivityField, e0: &RealField, e: &RealField) -> Result<f64> {
    let f = e.sub(e0);
    let lf = apply_conductivity(l, &f, 0.0)?;
    let le0 = apply_conductivity(l, e0, 0.0)?;
    Ok(0.5 * lf.dot(&f) + le0.dot(&f))
}

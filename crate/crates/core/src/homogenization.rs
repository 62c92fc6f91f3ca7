//! Effective conductivity from unit-load solves, with Voigt/Reuss bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{mean_value, RealField};
use crate::material::{apply_conductivity, ConductivityField};
use crate::solvers::{solve, SolverConfig};
use crate::spectral::GreenOperator;
use crate::tensor::Tensor;

/// Outcome of one column solve.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    pub tensor: Tensor,
    pub reuss: Tensor,
    pub voigt: Tensor,
    pub columns: Vec<ColumnSummary>,
}

impl EffectiveTensor {
    /// Relative asymmetry `max |L_ab - L_ba| / |L|`.
    pub fn relative_asymmetry(&self) -> f64 {
        self.tensor.asymmetry() / self.tensor.norm()
    }

    /// Smallest bound margin over `probes`, normalised by `|L_eff|`:
    /// `min(x.L.x - x.R.x, x.V.x - x.L.x) / |x|^2`. Negative values mean a
    /// bound is violated.
    pub fn bound_margin(&self, probes: &[Vec<f64>]) -> f64 {
        let scale = self.tensor.norm();
        probes
            .iter()
            .map(|x| {
                let xx: f64 = x.iter().map(|v| v * v).sum();
                let eff = self.tensor.quadratic_form(x);
                let lower = eff - self.reuss.quadratic_form(x);
                let upper = self.voigt.quadratic_form(x) - eff;
                lower.min(upper) / (xx * scale)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `<L e>`, the mean current.
pub fn average_current(l: &ConductivityField, e: &RealField) -> Result<Vec<f64>> {
    Ok(mean_value(&apply_conductivity(l, e, 0.0)?))
}

/// Arithmetic (Voigt) and harmonic (Reuss) nodal means, returned as
/// `(reuss, voigt)`.
pub fn voigt_reuss_bounds(l: &ConductivityField) -> Result<(Tensor, Tensor)> {
    let grid = l.grid();
    let n = grid.node_count();
    let d = grid.dim();
    let mut sum = Tensor::zeros(d);
    let mut inv_sum = Tensor::zeros(d);
    for node in 0..n {
        let t = l.tensor(node);
        sum = sum.add(t);
        inv_sum = inv_sum.add(&t.inverse()?);
    }
    let voigt = sum.scaled(1.0 / n as f64);
    let reuss = inv_sum.scaled(1.0 / n as f64).inverse()?;
    Ok((reuss, voigt))
}

/// Column `b` of the effective tensor is the mean current of the solve with
/// unit load along axis `b`. The `d` solves run in parallel.
pub fn effective_tensor(l: &ConductivityField, g: &GreenOperator, cfg: &SolverConfig) -> Result<EffectiveTensor> {
    let grid = *l.grid();
    let d = grid.dim();
    let columns = (0..d)
        .into_par_iter()
        .map(|b| {
            let mut load = vec![0.0; d];
            load[b] = 1.0;
            let e0 = RealField::constant(&grid, &load)?;
            let res = solve(l, g, &e0, cfg)?.ensure_converged()?;
            let current = average_current(l, &res.solution)?;
            let summary = ColumnSummary {
                iterations: res.iterations,
                converged: res.converged,
                final_residual: res.final_residual(),
                wall_time: res.wall_time,
            };
            Ok((current, summary))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tensor = Tensor::zeros(d);
    let mut summaries = Vec::with_capacity(d);
    for (b, (current, summary)) in columns.into_iter().enumerate() {
        for (a, v) in current.iter().enumerate() {
            tensor.set(a, b, *v);
        }
        summaries.push(summary);
    }
    let (reuss, voigt) = voigt_reuss_bounds(l)?;
    Ok(EffectiveTensor { tensor, reuss, voigt, columns: summaries })
}

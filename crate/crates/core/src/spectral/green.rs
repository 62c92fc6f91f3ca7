//! Periodic Green operator of an isotropic reference medium `L0 = lambda * I`.
//!
//! At a non-zero frequency the block is `xi (x) xi / (lambda xi . xi)` with
//! `xi_a = k_a / Y_a`; the zero frequency maps to zero. For an even `N_a` the
//! frequency `k_a = N_a / 2` is its own alias, so only the even part of the
//! mode survives on the grid: that component of `xi` is dropped before the
//! block is formed, which keeps the block even under `k -> -k` (real output)
//! and still a projector.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FrequencyLattice, GridSpec, SpectralField, MAX_DIM};
use crate::spectral::transform::SpectralTransform;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct GreenOperator {
    lattice: FrequencyLattice,
    lambda: f64,
    /// Unit direction of the block's range (zero for null blocks).
    directions: Vec<[f64; MAX_DIM]>,
    /// Block scale, `1 / lambda` for regular blocks.
    weights: Vec<f64>,
    transform: SpectralTransform,
}

impl GreenOperator {
    pub fn new(grid: &GridSpec, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("reference conductivity must be positive, got {lambda}")));
        }
        let lattice = FrequencyLattice::new(grid);
        let d = grid.dim();
        let mut directions = Vec::with_capacity(lattice.len());
        let mut weights = Vec::with_capacity(lattice.len());
        for bin in 0..lattice.len() {
            let mut xi = lattice.scaled(bin);
            for (a, v) in xi.iter_mut().enumerate().take(d) {
                if lattice.is_nyquist(bin, a) {
                    *v = 0.0;
                }
            }
            let norm = xi[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                directions.push([0.0; MAX_DIM]);
                weights.push(0.0);
            } else {
                xi.iter_mut().for_each(|v| *v /= norm);
                directions.push(xi);
                weights.push(1.0 / lambda);
            }
        }
        Ok(GreenOperator { lattice, lambda, directions, weights, transform: SpectralTransform::new(grid) })
    }

    pub fn grid(&self) -> &GridSpec {
        self.lattice.grid()
    }

    pub fn lattice(&self) -> &FrequencyLattice {
        &self.lattice
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    /// The `d x d` block acting on frequency bin `bin`.
    pub fn block(&self, bin: usize) -> Tensor {
        let d = self.grid().dim();
        let n = &self.directions[bin];
        let w = self.weights[bin];
        let mut t = Tensor::zeros(d);
        for a in 0..d {
            for b in 0..d {
                t.set(a, b, w * n[a] * n[b]);
            }
        }
        t
    }

    /// Flips the sign of the block at the first non-null frequency and of its
    /// conjugate partner. Used to check that the verification suite detects a
    /// corrupted operator.
    pub fn inject_sign_fault(&mut self) {
        if let Some(bin) = self.weights.iter().position(|&w| w != 0.0) {
            let partner = self.lattice.partner(bin);
            self.weights[bin] = -self.weights[bin];
            if partner != bin {
                self.weights[partner] = -self.weights[partner];
            }
        }
    }

    pub fn apply(&self, j: &SpectralField) -> Result<SpectralField> {
        if j.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let mut data = j.data().to_vec();
        self.apply_in_place(&mut data);
        SpectralField::from_vec(self.grid(), data)
    }

    /// `c(k) <- Gamma(k) c(k)` on a component-outermost coefficient buffer.
    pub(crate) fn apply_in_place(&self, data: &mut [Complex64]) {
        let n = self.lattice.len();
        let d = self.grid().dim();
        let mut v = [Complex64::new(0.0, 0.0); MAX_DIM];
        for bin in 0..n {
            let w = self.weights[bin];
            if w == 0.0 {
                for a in 0..d {
                    data[a * n + bin] = Complex64::new(0.0, 0.0);
                }
                continue;
            }
            let dir = &self.directions[bin];
            let mut proj = Complex64::new(0.0, 0.0);
            for a in 0..d {
                v[a] = data[a * n + bin];
                proj += v[a] * dir[a];
            }
            proj *= w;
            for a in 0..d {
                data[a * n + bin] = proj * dir[a];
            }
        }
    }
}

pub fn green_apply(j: &SpectralField, g: &GreenOperator) -> Result<SpectralField> {
    g.apply(j)
}

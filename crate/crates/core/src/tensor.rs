//! Small dense `d x d` tensors (d <= 3) for nodal conductivities.

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Relative tolerance of the leading-principal-minor SPD test.
pub const SPD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Tensor {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Tensor { dim, m: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut t = Self::zeros(dim);
        for a in 0..dim {
            t.m[a][a] = c;
        }
        t
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter(format!(
                "tensor must be square with at most {MAX_DIM} rows"
            )));
        }
        let mut t = Self::zeros(dim);
        for (a, row) in rows.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter("tensor entries must be finite".into()));
                }
                t.m[a][b] = v;
            }
        }
        Ok(t)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|a| self.m[a][..self.dim].to_vec()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.m[a][b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.m[a][b] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|a| (0..a).all(|b| self.m[a][b] == self.m[b][a]))
    }

    fn leading_minors(&self) -> [f64; MAX_DIM] {
        let m = &self.m;
        let mut out = [0.0; MAX_DIM];
        out[0] = m[0][0];
        if self.dim >= 2 {
            out[1] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        }
        if self.dim == 3 {
            out[2] = self.determinant();
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Exact symmetry plus positive leading principal minors, each measured
    /// against the matching power of the largest diagonal entry.
    pub fn check_spd(&self) -> Result<()> {
        if !self.is_symmetric() {
            return Err(Error::NotSpd("tensor is not symmetric".into()));
        }
        let scale = (0..self.dim).map(|a| self.m[a][a].abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::NotSpd("tensor has a zero diagonal".into()));
        }
        let minors = self.leading_minors();
        for (k, minor) in minors.iter().enumerate().take(self.dim) {
            if *minor <= SPD_TOLERANCE * scale.powi(k as i32 + 1) {
                return Err(Error::NotSpd(format!("leading minor {} equals {minor:.3e}", k + 1)));
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for a in 0..self.dim {
            out[a] = (0..self.dim).map(|b| self.m[a][b] * v[b]).sum();
        }
        out
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let lv = self.apply(v);
        (0..self.dim).map(|a| lv[a] * v[a]).sum()
    }

    pub fn inverse(&self) -> Result<Tensor> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NotSpd("singular tensor".into()));
        }
        let m = &self.m;
        let mut inv = Self::zeros(self.dim);
        match self.dim {
            1 => inv.m[0][0] = 1.0 / m[0][0],
            2 => {
                inv.m[0][0] = m[1][1] / det;
                inv.m[0][1] = -m[0][1] / det;
                inv.m[1][0] = -m[1][0] / det;
                inv.m[1][1] = m[0][0] / det;
            }
            _ => {
                for a in 0..3 {
                    for b in 0..3 {
                        let (r0, r1) = ((b + 1) % 3, (b + 2) % 3);
                        let (c0, c1) = ((a + 1) % 3, (a + 2) % 3);
                        inv.m[a][b] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
                    }
                }
            }
        }
        Ok(inv)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let mut out = *self;
        for a in 0..self.dim {
            for b in 0..self.dim {
                out.m[a][b] += other.m[a][b];
            }
        }
        out
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> Tensor {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entry of `|T - T^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..a {
                worst = worst.max((self.m[a][b] - self.m[b][a]).abs());
            }
        }
        worst
    }
}

//! Explicit `(I + B)` matrices for tiny grids, assembled column by column
//! through the matrix-free operator. Used as a direct-solve oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::material::ConductivityField;
use crate::spectral::{apply_system, project_e, GreenOperator};

/// Largest number of unknowns `d * |N|` accepted for dense assembly.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: Option<DVector<f64>>,
}

impl DenseSystem {
    pub fn apply(&self, x: &RealField) -> Result<RealField> {
        if x.data().len() != self.matrix.ncols() {
            return Err(Error::LengthMismatch { expected: self.matrix.ncols(), found: x.data().len() });
        }
        let y = &self.matrix * DVector::from_column_slice(x.data());
        RealField::from_vec(x.grid(), y.as_slice().to_vec())
    }

    /// LU solve of `matrix * e = rhs`.
    pub fn solve(&self, template: &RealField) -> Result<RealField> {
        let rhs = self
            .rhs
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("dense system has no right-hand side".into()))?;
        let sol = self
            .matrix
            .clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::InvalidParameter("dense system is singular".into()))?;
        RealField::from_vec(template.grid(), sol.as_slice().to_vec())
    }
}

fn check_size(size: usize) -> Result<()> {
    if size > DENSE_LIMIT {
        return Err(Error::SizeLimitExceeded { size, limit: DENSE_LIMIT });
    }
    Ok(())
}

fn assemble_columns(g: &GreenOperator, mut column: impl FnMut(&RealField) -> Result<RealField>) -> Result<DMatrix<f64>> {
    let size = g.grid().unknowns();
    check_size(size)?;
    let mut matrix = DMatrix::zeros(size, size);
    let mut unit = RealField::zeros(g.grid());
    for j in 0..size {
        unit.data_mut()[j] = 1.0;
        let col = column(&unit)?;
        matrix.column_mut(j).copy_from_slice(col.data());
        unit.data_mut()[j] = 0.0;
    }
    Ok(matrix)
}

pub fn assemble_dense(l: &ConductivityField, g: &GreenOperator, e0: Option<&RealField>) -> Result<DenseSystem> {
    let matrix = assemble_columns(g, |u| apply_system(u, l, g))?;
    let rhs = e0.map(|e| DVector::from_column_slice(e.data()));
    Ok(DenseSystem { matrix, rhs })
}

/// Dense matrix of the projection onto compatible fields.
pub fn assemble_projection(g: &GreenOperator) -> Result<DMatrix<f64>> {
    assemble_columns(g, |u| project_e(u, g))
}

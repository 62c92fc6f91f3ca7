//! Spectral machinery of the discrete Lippmann-Schwinger system
//! `(I + B) e = e0` with `B = F^-1 Gamma F (L - lambda I)`.
//!
//! Every operator here is matrix-free: one application costs `d` forward and
//! `d` inverse FFTs plus `O(d^2 |N|)` nodal work.

pub mod dense;
pub mod green;
pub mod transform;

pub use dense::{assemble_dense, DenseSystem, DENSE_LIMIT};
pub use green::{green_apply, GreenOperator};
pub use transform::{SpectralTransform, IMAGINARY_TOLERANCE};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField};
use crate::material::{apply_conductivity, apply_conductivity_into, ConductivityField};

pub fn forward_transform(e: &RealField, g: &GreenOperator) -> Result<SpectralField> {
    g.transform().forward(e)
}

pub fn inverse_transform(c: &SpectralField, g: &GreenOperator) -> Result<RealField> {
    g.transform().inverse(c)
}

/// `F^-1 Gamma F x`.
pub fn apply_gamma(x: &RealField, g: &GreenOperator) -> Result<RealField> {
    let mut out = RealField::zeros(g.grid());
    apply_gamma_into(x, g, &mut out, &mut Vec::new())?;
    Ok(out)
}

fn apply_gamma_into(x: &RealField, g: &GreenOperator, out: &mut RealField, spectral: &mut Vec<Complex64>) -> Result<()> {
    if x.grid() != g.grid() || out.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let t = g.transform();
    t.forward_into(x, spectral);
    g.apply_in_place(spectral);
    t.inverse_into(spectral, out)
}

/// Orthogonal projection onto the compatible fields, `lambda F^-1 Gamma F`.
pub fn project_e(x: &RealField, g: &GreenOperator) -> Result<RealField> {
    let mut out = apply_gamma(x, g)?;
    out.scale(g.lambda());
    Ok(out)
}

pub fn apply_b(e: &RealField, l: &ConductivityField, g: &GreenOperator) -> Result<RealField> {
    check_grids(l, g)?;
    let polarization = apply_conductivity(l, e, g.lambda())?;
    apply_gamma(&polarization, g)
}

/// `(I + B) e`.
pub fn apply_system(e: &RealField, l: &ConductivityField, g: &GreenOperator) -> Result<RealField> {
    let mut out = apply_b(e, l, g)?;
    out.axpy(1.0, e);
    Ok(out)
}

/// `(I + B)^T e = e + (L - lambda I) F^-1 Gamma F e`, valid for symmetric
/// nodal tensors.
pub fn apply_system_transpose(e: &RealField, l: &ConductivityField, g: &GreenOperator) -> Result<RealField> {
    check_grids(l, g)?;
    let ge = apply_gamma(e, g)?;
    let mut out = apply_conductivity(l, &ge, g.lambda())?;
    out.axpy(1.0, e);
    Ok(out)
}

fn check_grids(l: &ConductivityField, g: &GreenOperator) -> Result<()> {
    if l.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Borrowed pair `(L, Gamma)` exposing the system operator and its transpose.
#[derive(Debug, Clone, Copy)]
pub struct SystemOperator<'a> {
    pub conductivity: &'a ConductivityField,
    pub green: &'a GreenOperator,
}

impl<'a> SystemOperator<'a> {
    pub fn new(conductivity: &'a ConductivityField, green: &'a GreenOperator) -> Result<Self> {
        check_grids(conductivity, green)?;
        Ok(SystemOperator { conductivity, green })
    }

    pub fn apply(&self, e: &RealField) -> Result<RealField> {
        apply_system(e, self.conductivity, self.green)
    }

    pub fn apply_b(&self, e: &RealField) -> Result<RealField> {
        apply_b(e, self.conductivity, self.green)
    }

    pub fn apply_transpose(&self, e: &RealField) -> Result<RealField> {
        apply_system_transpose(e, self.conductivity, self.green)
    }

    /// `out = B e`.
    pub fn apply_b_into(&self, e: &RealField, out: &mut RealField, ws: &mut Workspace) -> Result<()> {
        apply_conductivity_into(self.conductivity, e, self.green.lambda(), &mut ws.nodal)?;
        apply_gamma_into(&ws.nodal, self.green, out, &mut ws.spectral)
    }

    /// `out = (I + B) e`.
    pub fn apply_into(&self, e: &RealField, out: &mut RealField, ws: &mut Workspace) -> Result<()> {
        self.apply_b_into(e, out, ws)?;
        out.axpy(1.0, e);
        Ok(())
    }

    /// `out = (I + B)^T e`.
    pub fn apply_transpose_into(&self, e: &RealField, out: &mut RealField, ws: &mut Workspace) -> Result<()> {
        apply_gamma_into(e, self.green, &mut ws.nodal, &mut ws.spectral)?;
        apply_conductivity_into(self.conductivity, &ws.nodal, self.green.lambda(), out)?;
        out.axpy(1.0, e);
        Ok(())
    }
}

/// Buffers reused across operator applications on one grid.
#[derive(Debug, Clone)]
pub struct Workspace {
    nodal: RealField,
    spectral: Vec<Complex64>,
}

impl Workspace {
    pub fn new(grid: &GridSpec) -> Self {
        Workspace { nodal: RealField::zeros(grid), spectral: Vec::with_capacity(grid.unknowns()) }
    }
}

//! Microstructures: the nodal conductivity field, the reference medium and
//! voxel-file ingestion.
//!
//! Voxel files are plain text. Line 1 holds `d`, line 2 the node counts
//! `N_1 .. N_d`, and the remaining tokens are `|N|` whitespace-separated
//! integer phase ids with the last axis running fastest. Tensors for each
//! phase come from the run configuration.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, MAX_DIM};
use crate::tensor::Tensor;

/// Phase id of the matrix in generated two-phase microstructures.
pub const MATRIX_PHASE: u32 = 0;
/// Phase id of the inclusion in generated two-phase microstructures.
pub const INCLUSION_PHASE: u32 = 1;

/// Radius of a centred sphere occupying a quarter of the unit cube.
pub fn quarter_volume_radius() -> f64 {
    (3.0 / (16.0 * std::f64::consts::PI)).cbrt()
}

/// Anisotropic matrix phase with unit diagonal and 0.2 off-diagonal coupling.
pub fn default_matrix_tensor(dim: usize) -> Tensor {
    let mut t = Tensor::identity(dim);
    for a in 0..dim {
        for b in 0..dim {
            if a != b {
                t.set(a, b, 0.2);
            }
        }
    }
    t
}

/// Per-node symmetric positive-definite conductivity tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityField {
    grid: GridSpec,
    tensors: Vec<Tensor>,
    index: Vec<u32>,
    phase_ids: Option<Vec<u32>>,
    contrast: Option<f64>,
}

impl ConductivityField {
    /// One tensor per node, no phase labels.
    pub fn from_nodal(grid: &GridSpec, tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.len() != grid.node_count() {
            return Err(Error::NodeCountMismatch { expected: grid.node_count(), found: tensors.len() });
        }
        for t in &tensors {
            check_tensor(grid, t)?;
        }
        Ok(ConductivityField {
            grid: *grid,
            index: (0..tensors.len() as u32).collect(),
            tensors,
            phase_ids: None,
            contrast: None,
        })
    }

    /// Like [`Self::from_nodal`] without the SPD check. Only meant for
    /// exercising solver failure paths.
    pub fn from_nodal_unchecked(grid: &GridSpec, tensors: Vec<Tensor>) -> Self {
        assert_eq!(tensors.len(), grid.node_count());
        ConductivityField {
            grid: *grid,
            index: (0..tensors.len() as u32).collect(),
            tensors,
            phase_ids: None,
            contrast: None,
        }
    }

    /// Phase-labelled field: node `i` carries `table[ids[i]]`.
    pub fn from_phases(grid: &GridSpec, ids: Vec<u32>, table: &BTreeMap<u32, Tensor>) -> Result<Self> {
        if ids.len() != grid.node_count() {
            return Err(Error::NodeCountMismatch { expected: grid.node_count(), found: ids.len() });
        }
        let mut slot = BTreeMap::new();
        let mut tensors = Vec::new();
        let mut index = Vec::with_capacity(ids.len());
        for &id in &ids {
            let pos = match slot.get(&id) {
                Some(&p) => p,
                None => {
                    let t = table.get(&id).ok_or(Error::UnknownPhase(id))?;
                    check_tensor(grid, t)?;
                    tensors.push(*t);
                    let p = (tensors.len() - 1) as u32;
                    slot.insert(id, p);
                    p
                }
            };
            index.push(pos);
        }
        Ok(ConductivityField { grid: *grid, tensors, index, phase_ids: Some(ids), contrast: None })
    }

    /// Every node carries `t`.
    pub fn homogeneous(grid: &GridSpec, t: Tensor) -> Result<Self> {
        let table = BTreeMap::from([(MATRIX_PHASE, t)]);
        Self::from_phases(grid, vec![MATRIX_PHASE; grid.node_count()], &table)
    }

    pub fn with_contrast(mut self, rho: f64) -> Self {
        self.contrast = Some(rho);
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn contrast(&self) -> Option<f64> {
        self.contrast
    }

    pub fn tensor(&self, node: usize) -> &Tensor {
        &self.tensors[self.index[node] as usize]
    }

    pub fn phase_ids(&self) -> Option<&[u32]> {
        self.phase_ids.as_deref()
    }

    /// True if every node carries the same tensor.
    pub fn is_homogeneous(&self) -> bool {
        self.tensors.iter().all(|t| t == &self.tensors[0])
    }

    /// Fraction of nodes labelled with `phase`.
    pub fn phase_fraction(&self, phase: u32) -> Result<f64> {
        let ids = self.phase_ids.as_ref().ok_or(Error::NoPhaseLabels)?;
        Ok(ids.iter().filter(|&&id| id == phase).count() as f64 / ids.len() as f64)
    }

    /// Fraction of nodes outside the matrix phase.
    pub fn volume_fraction(&self) -> Result<f64> {
        let ids = self.phase_ids.as_ref().ok_or(Error::NoPhaseLabels)?;
        Ok(ids.iter().filter(|&&id| id != MATRIX_PHASE).count() as f64 / ids.len() as f64)
    }
}

fn check_tensor(grid: &GridSpec, t: &Tensor) -> Result<()> {
    if t.dim() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "tensor of dimension {} on a {}-dimensional grid",
            t.dim(),
            grid.dim()
        )));
    }
    t.check_spd()
}

/// Homogeneous comparison medium `L0 = lambda * I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMedium {
    lambda: f64,
    omega: Option<f64>,
}

impl ReferenceMedium {
    pub fn explicit(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("reference conductivity must be positive, got {lambda}")));
        }
        Ok(ReferenceMedium { lambda, omega: None })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega(&self) -> Option<f64> {
        self.omega
    }
}

/// `lambda = 1 - omega + rho * omega`.
pub fn reference_lambda(rho: f64, omega: f64) -> Result<ReferenceMedium> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("contrast must be positive, got {rho}")));
    }
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidParameter(format!("omega must lie in [0, 1], got {omega}")));
    }
    Ok(ReferenceMedium { lambda: 1.0 - omega + rho * omega, omega: Some(omega) })
}

/// Centred sphere: a node is inclusion iff `|x| < radius` (strictly).
pub fn build_sphere_microstructure(
    grid: &GridSpec,
    radius: f64,
    inclusion: Tensor,
    matrix: Tensor,
) -> Result<ConductivityField> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be non-negative, got {radius}")));
    }
    let d = grid.dim();
    let ids = (0..grid.node_count())
        .map(|node| {
            let x = grid.node_coords(node);
            let r2: f64 = x[..d].iter().map(|v| v * v).sum();
            if r2.sqrt() < radius {
                INCLUSION_PHASE
            } else {
                MATRIX_PHASE
            }
        })
        .collect();
    let table = BTreeMap::from([(MATRIX_PHASE, matrix), (INCLUSION_PHASE, inclusion)]);
    ConductivityField::from_phases(grid, ids, &table)
}

/// Two-phase sphere with inclusion `rho * I` and the default matrix tensor,
/// filling a quarter of the unit cube.
pub fn contrast_sphere(grid: &GridSpec, rho: f64) -> Result<ConductivityField> {
    let d = grid.dim();
    Ok(build_sphere_microstructure(
        grid,
        quarter_volume_radius(),
        Tensor::scaled_identity(d, rho),
        default_matrix_tensor(d),
    )?
    .with_contrast(rho))
}

/// Random nodal tensors with eigenvalues drawn from `[1, contrast]` and random
/// principal axes.
pub fn random_spd_microstructure<R: Rng>(grid: &GridSpec, contrast: f64, rng: &mut R) -> Result<ConductivityField> {
    if !(contrast.is_finite() && contrast >= 1.0) {
        return Err(Error::InvalidParameter(format!("contrast must be at least 1, got {contrast}")));
    }
    let d = grid.dim();
    let tensors = (0..grid.node_count())
        .map(|_| {
            let axes = random_orthonormal(d, rng);
            let eig: Vec<f64> = (0..d).map(|_| 1.0 + (contrast - 1.0) * rng.random::<f64>()).collect();
            let mut t = Tensor::zeros(d);
            for a in 0..d {
                for b in 0..=a {
                    let v: f64 = (0..d).map(|k| eig[k] * axes[k][a] * axes[k][b]).sum();
                    t.set(a, b, v);
                    t.set(b, a, v);
                }
            }
            t
        })
        .collect();
    ConductivityField::from_nodal(grid, tensors)
}

fn random_orthonormal<R: Rng>(d: usize, rng: &mut R) -> Vec<[f64; MAX_DIM]> {
    loop {
        let mut basis: Vec<[f64; MAX_DIM]> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v = [0.0; MAX_DIM];
            for slot in v.iter_mut().take(d) {
                *slot = rng.random::<f64>() * 2.0 - 1.0;
            }
            for b in &basis {
                let proj: f64 = (0..d).map(|k| v[k] * b[k]).sum();
                for k in 0..d {
                    v[k] -= proj * b[k];
                }
            }
            let n = (0..d).map(|k| v[k] * v[k]).sum::<f64>().sqrt();
            if n < 1e-3 {
                break;
            }
            for slot in v.iter_mut().take(d) {
                *slot /= n;
            }
            basis.push(v);
        }
        if basis.len() == d {
            return basis;
        }
    }
}

/// Nodewise `(L(x) - shift * I) e(x)`.
pub fn apply_conductivity(l: &ConductivityField, e: &RealField, shift: f64) -> Result<RealField> {
    let mut out = RealField::zeros(&l.grid);
    apply_conductivity_into(l, e, shift, &mut out)?;
    Ok(out)
}

/// [`apply_conductivity`] writing into `out`.
pub fn apply_conductivity_into(l: &ConductivityField, e: &RealField, shift: f64, out: &mut RealField) -> Result<()> {
    if l.grid != *e.grid() || l.grid != *out.grid() {
        return Err(Error::GridMismatch);
    }
    let n = l.grid.node_count();
    let d = l.grid.dim();
    let src = e.data();
    let dst = out.data_mut();
    let mut v = [0.0; MAX_DIM];
    for node in 0..n {
        for (a, slot) in v.iter_mut().enumerate().take(d) {
            *slot = src[a * n + node];
        }
        let t = l.tensor(node);
        for a in 0..d {
            let mut acc = -shift * v[a];
            for (b, vb) in v.iter().enumerate().take(d) {
                acc += t.get(a, b) * vb;
            }
            dst[a * n + node] = acc;
        }
    }
    Ok(())
}

pub fn volume_fraction(l: &ConductivityField) -> Result<f64> {
    l.volume_fraction()
}

/// Reads a voxel phase file and maps phase ids through `table`.
pub fn load_voxel_phases<R: BufRead>(
    reader: R,
    half_widths: &[f64],
    table: &BTreeMap<u32, Tensor>,
) -> Result<ConductivityField> {
    let mut lines = reader.lines().enumerate();
    let mut next_content = |what: &str| -> Result<(usize, String)> {
        for (i, line) in lines.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::VoxelFormat { line: 0, message: format!("missing {what}") })
    };

    let (line_no, line) = next_content("dimension line")?;
    let dim: usize = line.trim().parse().map_err(|_| Error::VoxelFormat {
        line: line_no,
        message: format!("expected the spatial dimension, found {:?}", line.trim()),
    })?;
    let (line_no, line) = next_content("node count line")?;
    let counts = line
        .split_whitespace()
        .map(|tok| tok.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::VoxelFormat { line: line_no, message: "node counts must be positive integers".into() })?;
    if counts.len() != dim {
        return Err(Error::VoxelFormat {
            line: line_no,
            message: format!("expected {dim} node counts, found {}", counts.len()),
        });
    }
    let grid = GridSpec::new(dim, &counts, half_widths)
        .map_err(|e| Error::VoxelFormat { line: line_no, message: e.to_string() })?;

    let mut ids = Vec::with_capacity(grid.node_count());
    for (i, line) in lines {
        let line = line?;
        for tok in line.split_whitespace() {
            let id = tok.parse::<u32>().map_err(|_| Error::VoxelFormat {
                line: i + 1,
                message: format!("invalid phase id {tok:?}"),
            })?;
            ids.push(id);
        }
    }
    if ids.len() != grid.node_count() {
        return Err(Error::NodeCountMismatch { expected: grid.node_count(), found: ids.len() });
    }
    ConductivityField::from_phases(&grid, ids, table)
}

/// Writes the phase labels of `l` in the voxel format, one grid row per line.
pub fn write_voxel_phases<W: Write>(mut writer: W, l: &ConductivityField) -> Result<()> {
    let ids = l.phase_ids().ok_or(Error::NoPhaseLabels)?;
    let grid = l.grid();
    writeln!(writer, "{}", grid.dim())?;
    let counts: Vec<String> = grid.counts().iter().map(|n| n.to_string()).collect();
    writeln!(writer, "{}", counts.join(" "))?;
    let row = grid.counts()[grid.dim() - 1];
    for chunk in ids.chunks(row) {
        let line: Vec<String> = chunk.iter().map(|id| id.to_string()).collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

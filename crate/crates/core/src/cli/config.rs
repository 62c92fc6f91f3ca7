//! JSON run configuration.
//!
//! ```json
//! {
//!   "grid": { "d": 3, "n": 16, "Y": [0.5, 0.5, 0.5] },
//!   "microstructure": { "type": "sphere", "rho": 10.0 },
//!   "reference": { "omega": 0.5 },
//!   "load": [1.0, 0.0, 0.0],
//!   "solver": { "method": "cg", "tol": 1e-6, "max_iter": 10000 },
//!   "output": { "directory": "out" }
//! }
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::CliError;
use crate::grid::{GridSpec, RealField};
use crate::material::{
    build_sphere_microstructure, default_matrix_tensor, load_voxel_phases, quarter_volume_radius, reference_lambda,
    ConductivityField, ReferenceMedium,
};
use crate::solvers::{Method, SolverConfig};
use crate::tensor::Tensor;

/// Largest per-axis node count accepted in 3D without `--allow-large`.
pub const DESK_SCALE_LIMIT: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub microstructure: MicrostructureConfig,
    pub reference: ReferenceConfig,
    pub load: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub effective_tensor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    /// Same node count on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Per-axis node counts.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<usize>>,
    /// Per-axis half-widths; the unit cube when absent.
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MicrostructureConfig {
    Sphere {
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        /// Defaults to `rho * I`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inclusion: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    Voxel {
        path: PathBuf,
        /// Phase id (as a string key) to conductivity tensor.
        phases: BTreeMap<String, Vec<Vec<f64>>>,
        /// Contrast used to turn `omega` into a reference conductivity.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub record_iterates: bool,
}

fn default_method() -> Method {
    Method::Cg
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    10_000
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { method: default_method(), tol: default_tol(), max_iter: default_max_iter(), record_iterates: false }
    }
}

impl SolverSection {
    pub fn to_solver_config(&self, method: Method) -> SolverConfig {
        SolverConfig {
            method,
            tol: self.tol,
            max_iter: self.max_iter,
            record_iterates: self.record_iterates,
            initial_perturbation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Also write the solution field as `field.txt`.
    #[serde(default)]
    pub field_dump: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), field_dump: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub omega: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { omega: vec![0.3, 0.4, 0.5, 0.6, 0.7], rho: vec![10.0, 100.0, 1000.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n: Vec<usize>,
    /// Timing rounds; the fastest run of each solve is kept.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    5
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { n: vec![8, 16, 32], repeats: default_repeats() }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub record_iterates: bool,
}

/// Everything needed for one solve, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpec,
    pub conductivity: ConductivityField,
    pub reference: ReferenceMedium,
    pub load: RealField,
    pub rho: Option<f64>,
}

fn config_error(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: message.into() }
}

fn tensor_from(path: &str, rows: &[Vec<f64>], dim: usize) -> Result<Tensor, CliError> {
    let t = Tensor::from_rows(rows).map_err(|e| config_error(path, e.to_string()))?;
    if t.dim() != dim {
        return Err(config_error(path, format!("expected a {dim}x{dim} tensor")));
    }
    t.check_spd().map_err(|e| config_error(path, e.to_string()))?;
    Ok(t)
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(file)).map_err(CliError::Parse)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(CliError::Parse)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.directory = out.clone();
        }
        if let Some(m) = o.method {
            self.solver.method = m;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(k) = o.max_iter {
            self.solver.max_iter = k;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.record_iterates {
            self.solver.record_iterates = true;
        }
    }

    pub fn counts(&self) -> Result<Vec<usize>, CliError> {
        let d = self.grid.d;
        match (self.grid.n, &self.grid.counts) {
            (Some(_), Some(_)) => Err(config_error("grid", "give either `n` or `N`, not both")),
            (None, None) => Err(config_error("grid", "one of `n` or `N` is required")),
            (Some(n), None) => Ok(vec![n; d]),
            (None, Some(c)) => {
                if c.len() != d {
                    return Err(config_error("grid.N", format!("expected {d} node counts, got {}", c.len())));
                }
                Ok(c.clone())
            }
        }
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.grid.half_widths.clone().unwrap_or_else(|| vec![0.5; self.grid.d])
    }

    pub fn grid_for(&self, counts: &[usize]) -> Result<GridSpec, CliError> {
        GridSpec::new(self.grid.d, counts, &self.half_widths()).map_err(|e| config_error("grid", e.to_string()))
    }

    pub fn contrast(&self) -> Option<f64> {
        match &self.microstructure {
            MicrostructureConfig::Sphere { rho, .. } => Some(*rho),
            MicrostructureConfig::Voxel { rho, .. } => *rho,
        }
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self, allow_large: bool) -> Result<(), CliError> {
        let d = self.grid.d;
        if !(2..=3).contains(&d) {
            return Err(config_error("grid.d", format!("must be 2 or 3, got {d}")));
        }
        if let Some(y) = &self.grid.half_widths {
            if y.len() != d || y.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(config_error("grid.Y", format!("expected {d} positive half-widths")));
            }
        }
        if let MicrostructureConfig::Voxel { .. } = self.microstructure {
            if self.grid.n.is_some() || self.grid.counts.is_some() {
                return Err(config_error("grid", "node counts come from the voxel file; drop `n`/`N`"));
            }
        } else {
            let counts = self.counts()?;
            if counts.contains(&0) {
                return Err(config_error("grid", "node counts must be positive"));
            }
            check_desk_scale(d, &counts, allow_large, "grid")?;
        }

        match &self.microstructure {
            MicrostructureConfig::Sphere { rho, matrix, inclusion, radius } => {
                if !(rho.is_finite() && *rho > 0.0) {
                    return Err(config_error("microstructure.rho", "must be positive"));
                }
                if let Some(m) = matrix {
                    tensor_from("microstructure.matrix", m, d)?;
                }
                if let Some(m) = inclusion {
                    tensor_from("microstructure.inclusion", m, d)?;
                }
                if let Some(r) = radius {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(config_error("microstructure.radius", "must be non-negative"));
                    }
                }
            }
            MicrostructureConfig::Voxel { phases, rho, .. } => {
                if phases.is_empty() {
                    return Err(config_error("microstructure.phases", "phase table is empty"));
                }
                phase_table(phases, d)?;
                if let Some(r) = rho {
                    if !(r.is_finite() && *r > 0.0) {
                        return Err(config_error("microstructure.rho", "must be positive"));
                    }
                }
            }
        }

        match (self.reference.omega, self.reference.lambda) {
            (Some(_), Some(_)) => return Err(config_error("reference", "exactly one of `omega` or `lambda` is allowed")),
            (None, None) => return Err(config_error("reference", "one of `omega` or `lambda` is required")),
            (Some(w), None) => {
                if !(0.0..=1.0).contains(&w) {
                    return Err(config_error("reference.omega", "must lie in [0, 1]"));
                }
                if self.contrast().is_none() {
                    return Err(config_error("reference.omega", "needs a contrast `microstructure.rho`"));
                }
            }
            (None, Some(l)) => {
                if !(l.is_finite() && l > 0.0) {
                    return Err(config_error("reference.lambda", "must be positive"));
                }
            }
        }

        if self.load.len() != d {
            return Err(config_error("load", format!("expected {d} components, got {}", self.load.len())));
        }
        if self.load.iter().any(|v| !v.is_finite()) || self.load.iter().all(|&v| v == 0.0) {
            return Err(config_error("load", "macroscopic field must be finite and non-zero"));
        }

        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) {
            return Err(config_error("solver.tol", "must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(config_error("solver.max_iter", "must be at least 1"));
        }

        if let Some(s) = &self.sweep {
            if s.omega.is_empty() || s.omega.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
                return Err(config_error("sweep.omega", "values must lie in (0, 1]"));
            }
            if s.rho.is_empty() || s.rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(config_error("sweep.rho", "values must be positive"));
            }
        }
        if let Some(s) = &self.scaling {
            if s.n.is_empty() || s.n.contains(&0) {
                return Err(config_error("scaling.n", "values must be positive"));
            }
            if s.repeats == 0 {
                return Err(config_error("scaling.repeats", "must be at least 1"));
            }
            if s.n.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config_error("scaling.n", "values must be strictly ascending"));
            }
            for &n in &s.n {
                check_desk_scale(d, &vec![n; d], allow_large, "scaling.n")?;
            }
        }
        Ok(())
    }

    fn reference_for(&self, rho: Option<f64>) -> Result<ReferenceMedium, CliError> {
        match (self.reference.omega, self.reference.lambda) {
            (Some(w), _) => {
                let rho = rho.ok_or_else(|| config_error("reference.omega", "needs a contrast"))?;
                reference_lambda(rho, w).map_err(|e| config_error("reference.omega", e.to_string()))
            }
            (None, Some(l)) => ReferenceMedium::explicit(l).map_err(|e| config_error("reference.lambda", e.to_string())),
            (None, None) => Err(config_error("reference", "one of `omega` or `lambda` is required")),
        }
    }

    /// Sphere microstructure on `grid` with contrast `rho`.
    pub fn sphere_on(&self, grid: &GridSpec, rho: f64) -> Result<ConductivityField, CliError> {
        let MicrostructureConfig::Sphere { matrix, inclusion, radius, .. } = &self.microstructure else {
            return Err(config_error("microstructure.type", "this experiment needs a sphere microstructure"));
        };
        let d = grid.dim();
        let matrix = match matrix {
            Some(m) => tensor_from("microstructure.matrix", m, d)?,
            None => default_matrix_tensor(d),
        };
        let inclusion = match inclusion {
            Some(m) => tensor_from("microstructure.inclusion", m, d)?,
            None => Tensor::scaled_identity(d, rho),
        };
        let radius = radius.unwrap_or_else(quarter_volume_radius);
        Ok(build_sphere_microstructure(grid, radius, inclusion, matrix)
            .map_err(|e| config_error("microstructure", e.to_string()))?
            .with_contrast(rho))
    }

    /// Builds the problem on the configured grid, or on `n` nodes per axis if given.
    pub fn problem(&self, n_override: Option<usize>, rho_override: Option<f64>) -> Result<Problem, CliError> {
        let rho = rho_override.or(self.contrast());
        let conductivity = match &self.microstructure {
            MicrostructureConfig::Sphere { .. } => {
                let counts = match n_override {
                    Some(n) => vec![n; self.grid.d],
                    None => self.counts()?,
                };
                let grid = self.grid_for(&counts)?;
                self.sphere_on(&grid, rho.expect("sphere has a contrast"))?
            }
            MicrostructureConfig::Voxel { path, phases, .. } => {
                let table = phase_table(phases, self.grid.d)?;
                let file = File::open(path)
                    .map_err(|e| config_error("microstructure.path", format!("{}: {e}", path.display())))?;
                let field = load_voxel_phases(BufReader::new(file), &self.half_widths(), &table)
                    .map_err(|e| config_error("microstructure.path", e.to_string()))?;
                if field.grid().dim() != self.grid.d {
                    return Err(config_error("grid.d", "does not match the voxel file"));
                }
                field
            }
        };
        let grid = *conductivity.grid();
        let reference = self.reference_for(rho)?;
        let load = RealField::constant(&grid, &self.load).map_err(|e| config_error("load", e.to_string()))?;
        Ok(Problem { grid, conductivity, reference, load, rho })
    }
}

fn phase_table(phases: &BTreeMap<String, Vec<Vec<f64>>>, dim: usize) -> Result<BTreeMap<u32, Tensor>, CliError> {
    let mut table = BTreeMap::new();
    for (key, rows) in phases {
        let path = format!("microstructure.phases.{key}");
        let id: u32 = key.parse().map_err(|_| config_error(&path, "phase ids must be non-negative integers"))?;
        table.insert(id, tensor_from(&path, rows, dim)?);
    }
    Ok(table)
}

fn check_desk_scale(d: usize, counts: &[usize], allow_large: bool, path: &str) -> Result<(), CliError> {
    if d == 3 && !allow_large && counts.iter().any(|&n| n > DESK_SCALE_LIMIT) {
        return Err(config_error(
            path,
            format!("3D grids beyond {DESK_SCALE_LIMIT} nodes per axis need --allow-large"),
        ));
    }
    Ok(())
}

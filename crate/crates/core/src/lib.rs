//! Matrix-free FFT-based solvers for periodic unit-cell homogenization of
//! linear conduction.
//!
//! The cell problem is discretized by trigonometric collocation on a regular
//! grid, giving the non-symmetric system `(I + B) e = e0` with
//! `B = F^-1 Gamma F (L - lambda I)`. The crate provides the fixed-point
//! (Neumann series) scheme, conjugate gradients and biconjugate gradients on
//! that system, the projection onto compatible fields that explains why CG
//! works, dense oracles for tiny grids, effective-tensor extraction and a
//! small experiment runner.


pub mod cli;
pub mod error;
pub mod grid;
pub mod homogenization;
pub mod material;
pub mod solvers;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use grid::{make_grid, FrequencyLattice, GridSpec, RealField, SpectralField};
pub use homogenization::{effective_tensor, EffectiveTensor};
pub use material::{ConductivityField, ReferenceMedium};
pub use solvers::{solve, Method, SolveResult, SolverConfig};
pub use spectral::{GreenOperator, SystemOperator};
pub use tensor::Tensor;

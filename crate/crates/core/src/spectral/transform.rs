//! Multi-dimensional DFT on the nodal grid.
//!
//! Forward: `c(k) = |N|^-1 sum_m f(x_m) exp(-2 pi i sum_a k_a m_a / N_a)`.
//! Inverse: unscaled, so `inverse(forward(f)) = f`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField, MAX_DIM};

/// Relative size of the imaginary part tolerated after an inverse transform.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Lines transformed together along a strided axis.
const LINE_BATCH: usize = 16;

/// Precomputed per-axis FFT plans for one grid.
#[derive(Clone)]
pub struct SpectralTransform {
    grid: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch_len: usize,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform").field("grid", &self.grid).finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = grid.counts().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = grid.counts().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        SpectralTransform { grid: *grid, forward, inverse, scratch_len }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, e: &RealField) -> Result<SpectralField> {
        if e.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        SpectralField::from_vec(&self.grid, self.forward_raw(e))
    }

    /// Inverse transform; fails if the result is not real to within
    /// [`IMAGINARY_TOLERANCE`] relative to its norm.
    pub fn inverse(&self, c: &SpectralField) -> Result<RealField> {
        if c.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut data = c.data().to_vec();
        self.inverse_in_place(&mut data)
    }

    /// Like [`Self::inverse`] but consumes a raw coefficient buffer.
    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) -> Result<RealField> {
        let mut out = RealField::zeros(&self.grid);
        self.inverse_into(data, &mut out)?;
        Ok(out)
    }

    /// Inverse transform of `data` (overwritten) with the real part stored in `out`.
    pub(crate) fn inverse_into(&self, data: &mut [Complex64], out: &mut RealField) -> Result<()> {
        self.transform_components(data, &self.inverse);
        let (mut re2, mut im2) = (0.0, 0.0);
        for (o, z) in out.data_mut().iter_mut().zip(data.iter()) {
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            *o = z.re;
        }
        if im2 > 0.0 {
            let ratio = (im2 / (re2 + im2)).sqrt();
            if ratio > IMAGINARY_TOLERANCE {
                return Err(Error::NonNegligibleImaginaryPart { ratio });
            }
        }
        if out.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field entries must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn forward_raw(&self, e: &RealField) -> Vec<Complex64> {
        let mut data = Vec::with_capacity(e.data().len());
        self.forward_into(e, &mut data);
        data
    }

    /// Forward transform of `e` into `out`, reusing its allocation.
    pub(crate) fn forward_into(&self, e: &RealField, out: &mut Vec<Complex64>) {
        let scale = 1.0 / self.grid.node_count() as f64;
        out.clear();
        out.extend(e.data().iter().map(|&v| Complex64::new(v * scale, 0.0)));
        self.transform_components(out, &self.forward);
    }

    fn transform_components(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let n = self.grid.node_count();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        let longest = self.grid.counts().iter().copied().max().unwrap_or(1);
        let mut lines = vec![Complex64::new(0.0, 0.0); LINE_BATCH * longest];
        for comp in data.chunks_mut(n) {
            self.transform_scalar(comp, plans, &mut lines, &mut scratch);
        }
    }

    /// In-place d-dimensional transform of one scalar grid.
    fn transform_scalar(
        &self,
        buf: &mut [Complex64],
        plans: &[Arc<dyn Fft<f64>>],
        lines: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        let d = self.grid.dim();
        let counts = self.grid.counts();
        let mut strides = [1usize; MAX_DIM];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * counts[a + 1];
        }
        for a in 0..d {
            let len = counts[a];
            if len == 1 {
                continue;
            }
            let stride = strides[a];
            if stride == 1 {
                plans[a].process_with_scratch(buf, scratch);
                continue;
            }
            // Each block of `len * stride` entries holds `stride` interleaved
            // lines; gather up to LINE_BATCH adjacent ones into contiguous rows,
            // transform, scatter back.
            for chunk in buf.chunks_mut(len * stride) {
                for j0 in (0..stride).step_by(LINE_BATCH) {
                    let width = LINE_BATCH.min(stride - j0);
                    let tmp = &mut lines[..width * len];
                    for i in 0..len {
                        let row = &chunk[i * stride + j0..i * stride + j0 + width];
                        for (j, z) in row.iter().enumerate() {
                            tmp[j * len + i] = *z;
                        }
                    }
                    plans[a].process_with_scratch(tmp, scratch);
                    for i in 0..len {
                        let row = &mut chunk[i * stride + j0..i * stride + j0 + width];
                        for (j, z) in row.iter_mut().enumerate() {
                            *z = tmp[j * len + i];
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, FrequencyLattice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// O(|N|^2) DFT straight from the definition.
    fn naive_dft(grid: &GridSpec, values: &[Complex64], sign: f64, scale: f64) -> Vec<Complex64> {
        let n = grid.node_count();
        let d = grid.dim();
        let counts = grid.counts();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, slot) in out.iter_mut().enumerate() {
            let km = grid.multi_index(k);
            for (m, v) in values.iter().enumerate() {
                let mm = grid.multi_index(m);
                let phase: f64 = (0..d).map(|a| (km[a] * mm[a]) as f64 / counts[a] as f64).sum();
                *slot += v * Complex64::from_polar(1.0, sign * 2.0 * PI * phase);
            }
            *slot *= scale;
        }
        out
    }

    fn random_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> RealField {
        RealField::from_vec(grid, (0..grid.unknowns()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
    }

    #[test]
    fn constant_field_is_dc_only() {
        let g = make_grid(3, &[4, 3, 2], &[0.5; 3]).unwrap();
        let t = SpectralTransform::new(&g);
        let c = t.forward(&RealField::constant(&g, &[2.0, -1.0, 0.5]).unwrap()).unwrap();
        for (a, want) in [2.0, -1.0, 0.5].iter().enumerate() {
            for bin in 0..g.node_count() {
                let z = c.coefficient(a, bin);
                let expect = if bin == 0 { *want } else { 0.0 };
                assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_cosine_mode() {
        let g = make_grid(2, &[8, 4], &[0.5, 0.5]).unwrap();
        let lat = FrequencyLattice::new(&g);
        let t = SpectralTransform::new(&g);
        let mut e = RealField::zeros(&g);
        for node in 0..g.node_count() {
            let m = g.multi_index(node);
            e.data_mut()[node] = (2.0 * PI * m[0] as f64 / 8.0).cos();
        }
        let c = t.forward(&e).unwrap();
        let plus = lat.bin_of(&[1, 0]).unwrap();
        let minus = lat.bin_of(&[-1, 0]).unwrap();
        for bin in 0..g.node_count() {
            let expect = if bin == plus || bin == minus { 0.5 } else { 0.0 };
            assert!((c.coefficient(0, bin) - Complex64::new(expect, 0.0)).norm() < 1e-15);
            assert!(c.coefficient(1, bin).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, counts) in [(2, vec![4, 4]), (2, vec![5, 3]), (3, vec![4, 3, 2]), (3, vec![1, 4, 5])] {
            let g = make_grid(d, &counts, &vec![0.5; d]).unwrap();
            let t = SpectralTransform::new(&g);
            let e = random_field(&g, &mut rng);
            let c = t.forward(&e).unwrap();
            let n = g.node_count();
            for a in 0..d {
                let vals: Vec<Complex64> = e.component(a).iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let want = naive_dft(&g, &vals, -1.0, 1.0 / n as f64);
                for bin in 0..n {
                    assert!((c.coefficient(a, bin) - want[bin]).norm() < 1e-14, "{counts:?}");
                }
            }
        }
    }

    #[test]
    fn inverse_matches_naive_on_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = make_grid(2, &[4, 5], &[0.5, 0.5]).unwrap();
        let lat = FrequencyLattice::new(&g);
        let t = SpectralTransform::new(&g);
        let n = g.node_count();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.unknowns()];
        for a in 0..2 {
            for bin in 0..n {
                let p = lat.partner(bin);
                if p < bin {
                    continue;
                }
                let z = if p == bin {
                    Complex64::new(rng.random::<f64>(), 0.0)
                } else {
                    Complex64::new(rng.random::<f64>(), rng.random::<f64>())
                };
                coeffs[a * n + bin] = z;
                coeffs[a * n + p] = z.conj();
            }
        }
        let spec = SpectralField::from_vec(&g, coeffs.clone()).unwrap();
        let e = t.inverse(&spec).unwrap();
        for a in 0..2 {
            let want = naive_dft(&g, &coeffs[a * n..(a + 1) * n], 1.0, 1.0);
            for node in 0..n {
                assert!(want[node].im.abs() < 1e-13);
                assert!((e.component(a)[node] - want[node].re).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dc_only_inverse_is_constant() {
        let g = make_grid(2, &[3, 4], &[0.5, 0.5]).unwrap();
        let t = SpectralTransform::new(&g);
        let mut c = SpectralField::zeros(&g);
        c.data_mut()[0] = Complex64::new(1.5, 0.0);
        c.data_mut()[g.node_count()] = Complex64::new(-0.5, 0.0);
        let e = t.inverse(&c).unwrap();
        assert!(e.component(0).iter().all(|&v| (v - 1.5).abs() < 1e-15));
        assert!(e.component(1).iter().all(|&v| (v + 0.5).abs() < 1e-15));
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (d, counts) in [(2, vec![8, 8]), (3, vec![6, 5, 4]), (2, vec![1, 7])] {
            let g = make_grid(d, &counts, &vec![0.5; d]).unwrap();
            let t = SpectralTransform::new(&g);
            let u = random_field(&g, &mut rng);
            let v = random_field(&g, &mut rng);
            let (cu, cv) = (t.forward(&u).unwrap(), t.forward(&v).unwrap());
            let back = t.inverse(&cu).unwrap();
            assert!(back.sub(&u).norm() <= 1e-13 * u.norm());
            let spectral: f64 = cu.data().iter().zip(cv.data()).map(|(a, b)| (a * b.conj()).re).sum();
            let parseval = g.node_count() as f64 * spectral;
            assert!((parseval - u.dot(&v)).abs() <= 1e-12 * u.norm() * v.norm());
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let g = make_grid(2, &[4, 4], &[0.5, 0.5]).unwrap();
        let t = SpectralTransform::new(&g);
        let mut c = SpectralField::zeros(&g);
        c.data_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(t.inverse(&c), Err(Error::NonNegligibleImaginaryPart { .. })));
    }
}

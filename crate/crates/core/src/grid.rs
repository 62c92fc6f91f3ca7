//! Periodic grids, the reduced frequency set and nodal field containers.
//!
//! Nodes sit at `x_m = -Y + h * m` for `m = 0..N-1` along every axis, so one
//! full period is covered without duplicating the `+Y` face. Fields are stored
//! component-outermost with the last spatial axis running fastest: component
//! `a` of node `i` lives at `a * |N| + i`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Geometry and discretization of the unit cell `prod(-Y_a, Y_a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    counts: [usize; MAX_DIM],
    half_widths: [f64; MAX_DIM],
    spacing: [f64; MAX_DIM],
}

impl GridSpec {
    pub fn new(dim: usize, counts: &[usize], half_widths: &[f64]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if counts.len() != dim || half_widths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} node counts and half-widths, got {} and {}",
                counts.len(),
                half_widths.len()
            )));
        }
        let mut grid = GridSpec {
            dim,
            counts: [1; MAX_DIM],
            half_widths: [1.0; MAX_DIM],
            spacing: [0.0; MAX_DIM],
        };
        for a in 0..dim {
            if counts[a] == 0 {
                return Err(Error::InvalidGrid(format!("node count along axis {a} must be positive")));
            }
            let y = half_widths[a];
            if !(y.is_finite() && y > 0.0) {
                return Err(Error::InvalidGrid(format!("half-width along axis {a} must be positive, got {y}")));
            }
            grid.counts[a] = counts[a];
            grid.half_widths[a] = y;
            grid.spacing[a] = 2.0 * y / counts[a] as f64;
        }
        Ok(grid)
    }

    /// Cube `prod(-1/2, 1/2)` with `n` nodes per axis.
    pub fn unit_cube(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, &vec![n; dim], &vec![0.5; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// `|N|`, the number of nodes.
    pub fn node_count(&self) -> usize {
        self.counts().iter().product()
    }

    /// Number of scalar unknowns, `d * |N|`.
    pub fn unknowns(&self) -> usize {
        self.dim * self.node_count()
    }

    /// Measure of the unit cell.
    pub fn cell_volume(&self) -> f64 {
        self.half_widths().iter().map(|y| 2.0 * y).product()
    }

    pub fn multi_index(&self, node: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        let mut rest = node;
        for a in (0..self.dim).rev() {
            m[a] = rest % self.counts[a];
            rest /= self.counts[a];
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.counts[a] + m[a])
    }

    pub fn node_coords(&self, node: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(node);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = -self.half_widths[a] + self.spacing[a] * m[a] as f64;
        }
        x
    }
}

/// Integer frequency of a DFT bin along one axis: `m` if `m <= N/2`, else `m - N`.
pub fn bin_frequency(m: usize, n: usize) -> i64 {
    if 2 * m <= n {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Inverse of [`bin_frequency`]; `None` if `k` is outside `-N/2 < k <= N/2`.
pub fn frequency_bin(k: i64, n: usize) -> Option<usize> {
    let n_i = n as i64;
    if 2 * k <= -n_i || 2 * k > n_i {
        return None;
    }
    Some(k.rem_euclid(n_i) as usize)
}

/// The reduced frequency set, indexed by DFT bin.
#[derive(Debug, Clone)]
pub struct FrequencyLattice {
    grid: GridSpec,
    freqs: Vec<[i64; MAX_DIM]>,
}

impl FrequencyLattice {
    pub fn new(grid: &GridSpec) -> Self {
        let freqs = (0..grid.node_count())
            .map(|bin| {
                let m = grid.multi_index(bin);
                let mut k = [0i64; MAX_DIM];
                for a in 0..grid.dim() {
                    k[a] = bin_frequency(m[a], grid.counts[a]);
                }
                k
            })
            .collect();
        FrequencyLattice { grid: *grid, freqs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn frequency(&self, bin: usize) -> &[i64] {
        &self.freqs[bin][..self.grid.dim()]
    }

    /// Scaled frequency `xi_a = k_a / Y_a`.
    pub fn scaled(&self, bin: usize) -> [f64; MAX_DIM] {
        let mut xi = [0.0; MAX_DIM];
        for a in 0..self.grid.dim() {
            xi[a] = self.freqs[bin][a] as f64 / self.grid.half_widths[a];
        }
        xi
    }

    pub fn bin_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.grid.dim() {
            return None;
        }
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.grid.dim() {
            m[a] = frequency_bin(k[a], self.grid.counts[a])?;
        }
        Some(self.grid.flat_index(&m))
    }

    /// Bin holding the alias of `-k`, the conjugate partner of `bin` in the
    /// spectrum of a real field.
    pub fn partner(&self, bin: usize) -> usize {
        let m = self.grid.multi_index(bin);
        let mut p = [0usize; MAX_DIM];
        for a in 0..self.grid.dim() {
            let n = self.grid.counts[a];
            p[a] = (n - m[a]) % n;
        }
        self.grid.flat_index(&p)
    }

    /// True if `k_a = N_a / 2` for an even `N_a`.
    pub fn is_nyquist(&self, bin: usize, axis: usize) -> bool {
        let n = self.grid.counts[axis] as i64;
        n % 2 == 0 && self.freqs[bin][axis] == n / 2
    }
}

/// Real block vector, one `d`-vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &GridSpec) -> Self {
        RealField { grid: *grid, data: vec![0.0; grid.unknowns()] }
    }

    pub fn from_vec(grid: &GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.unknowns() {
            return Err(Error::LengthMismatch { expected: grid.unknowns(), found: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field entries must be finite".into()));
        }
        Ok(RealField { grid: *grid, data })
    }

    /// Field equal to `value` at every node.
    pub fn constant(grid: &GridSpec, value: &[f64]) -> Result<Self> {
        if value.len() != grid.dim() {
            return Err(Error::LengthMismatch { expected: grid.dim(), found: value.len() });
        }
        let n = grid.node_count();
        let data = value.iter().flat_map(|&v| std::iter::repeat_n(v, n)).collect();
        Self::from_vec(grid, data)
    }

    /// Field whose component `a` at node `x` is `f(x)[a]`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let n = grid.node_count();
        let d = grid.dim();
        let mut data = vec![0.0; d * n];
        for node in 0..n {
            let x = grid.node_coords(node);
            let v = f(&x[..d]);
            for a in 0..d {
                data[a * n + node] = v[a];
            }
        }
        RealField { grid: *grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, a: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.data[a * n..(a + 1) * n]
    }

    pub fn node_value(&self, node: usize) -> [f64; MAX_DIM] {
        let n = self.grid.node_count();
        let mut v = [0.0; MAX_DIM];
        for (a, slot) in v.iter_mut().enumerate().take(self.grid.dim()) {
            *slot = self.data[a * n + node];
        }
        v
    }

    pub fn check_same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Euclidean inner product; panics on mismatched grids.
    pub fn dot(&self, other: &RealField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product of fields on different grids");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &RealField) {
        assert_eq!(self.grid, x.grid);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    /// `self = x + beta * self`
    pub fn xpby(&mut self, x: &RealField, beta: f64) {
        assert_eq!(self.grid, x.grid);
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s = v + beta * *s;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.node_count() as f64;
        (0..self.grid.dim()).map(|a| self.component(a).iter().sum::<f64>() / n).collect()
    }
}

/// Complex Fourier coefficients, one `d`-vector per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        SpectralField { grid: *grid, data: vec![Complex64::new(0.0, 0.0); grid.unknowns()] }
    }

    pub fn from_vec(grid: &GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.unknowns() {
            return Err(Error::LengthMismatch { expected: grid.unknowns(), found: data.len() });
        }
        Ok(SpectralField { grid: *grid, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn coefficient(&self, a: usize, bin: usize) -> Complex64 {
        self.data[a * self.grid.node_count() + bin]
    }
}

pub fn make_grid(dim: usize, counts: &[usize], half_widths: &[f64]) -> Result<GridSpec> {
    GridSpec::new(dim, counts, half_widths)
}

pub fn frequency_lattice(grid: &GridSpec) -> FrequencyLattice {
    FrequencyLattice::new(grid)
}

pub fn inner_product(u: &RealField, v: &RealField) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(u.dot(v))
}

/// Per-component arithmetic mean over the nodes.
pub fn mean_value(u: &RealField) -> Vec<f64> {
    u.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing() {
        let g = make_grid(3, &[16, 16, 16], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(g.spacing(), &[1.0 / 16.0; 3]);
        assert_eq!(g.node_count(), 4096);

        let g = make_grid(2, &[1, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(g.spacing(), &[2.0, 2.0]);
        assert_eq!(g.node_count(), 1);
        assert_eq!(&g.node_coords(0)[..2], &[-1.0, -1.0]);

        let g = make_grid(2, &[4, 2], &[1.0, 0.5]).unwrap();
        assert_eq!(g.spacing(), &[0.5, 0.5]);
        for a in 0..2 {
            assert_eq!(g.spacing()[a] * g.counts()[a] as f64, 2.0 * g.half_widths()[a]);
        }
    }

    #[test]
    fn node_coordinates_cover_one_period() {
        let g = make_grid(2, &[4, 2], &[1.0, 0.5]).unwrap();
        let xs: Vec<f64> = (0..4).map(|m| g.node_coords(g.flat_index(&[m, 0]))[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(g.node_coords(g.flat_index(&[0, 1]))[1], 0.0);
        // last axis fastest
        assert_eq!(g.flat_index(&[1, 0]), 2);
        assert_eq!(g.multi_index(3)[..2], [1, 1]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(1, &[4], &[1.0]).is_err());
        assert!(make_grid(4, &[4; 4], &[1.0; 4]).is_err());
        assert!(make_grid(2, &[0, 4], &[1.0, 1.0]).is_err());
        assert!(make_grid(2, &[4, 4], &[1.0, 0.0]).is_err());
        assert!(make_grid(2, &[4, 4], &[-1.0, 1.0]).is_err());
        assert!(make_grid(2, &[4, 4, 4], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn reduced_frequencies() {
        let freqs = |n: usize| (0..n).map(|m| bin_frequency(m, n)).collect::<Vec<_>>();
        assert_eq!(freqs(4), vec![0, 1, 2, -1]);
        assert_eq!(freqs(1), vec![0]);
        assert_eq!(freqs(5), vec![0, 1, 2, -2, -1]);
        assert_eq!(frequency_bin(-2, 4), None);
        assert_eq!(frequency_bin(2, 4), Some(2));
        assert_eq!(frequency_bin(3, 5), None);
    }

    #[test]
    fn lattice_scaled_frequency() {
        let g = make_grid(2, &[4, 3], &[0.5, 2.0]).unwrap();
        let lat = frequency_lattice(&g);
        let bin = lat.bin_of(&[-1, 1]).unwrap();
        assert_eq!(lat.frequency(bin), &[-1, 1]);
        assert_eq!(&lat.scaled(bin)[..2], &[-2.0, 0.5]);
        assert!(lat.is_nyquist(lat.bin_of(&[2, 0]).unwrap(), 0));
        assert!(!lat.is_nyquist(lat.bin_of(&[1, 1]).unwrap(), 1));
    }

    #[test]
    fn nyquist_appears_once() {
        for n in [2usize, 4, 6, 8] {
            let ks: Vec<i64> = (0..n).map(|m| bin_frequency(m, n)).collect();
            let half = (n / 2) as i64;
            assert_eq!(ks.iter().filter(|&&k| k == half).count(), 1);
            assert!(!ks.contains(&-half));
        }
    }

    #[test]
    fn inner_product_basics() {
        let g = make_grid(2, &[2, 2], &[1.0, 1.0]).unwrap();
        let z = RealField::zeros(&g);
        assert_eq!(inner_product(&z, &z).unwrap(), 0.0);
        let mut e = RealField::zeros(&g);
        e.data_mut()[5] = 1.0;
        assert_eq!(inner_product(&e, &e).unwrap(), 1.0);

        let u = RealField::from_vec(&g, vec![1.0, -2.0, 0.5, 3.0, 0.25, 1.0, -1.0, 2.0]).unwrap();
        let v = RealField::from_vec(&g, vec![2.0, 1.0, 4.0, -1.0, 8.0, 0.5, 3.0, 1.5]).unwrap();
        // 2 - 2 + 2 - 3 + 2 + 0.5 - 3 + 3
        assert_eq!(inner_product(&u, &v).unwrap(), 1.5);

        let other = RealField::zeros(&make_grid(2, &[2, 3], &[1.0, 1.0]).unwrap());
        assert!(matches!(inner_product(&u, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn mean_of_constant_and_alternating() {
        let g = make_grid(3, &[2, 3, 4], &[0.5, 0.5, 0.5]).unwrap();
        let c = RealField::constant(&g, &[1.5, -2.0, 0.25]).unwrap();
        for (m, v) in mean_value(&c).iter().zip([1.5, -2.0, 0.25]) {
            assert!((m - v).abs() < 1e-15);
        }
        let alt = RealField::from_fn(&g, |x| {
            let s = if x[2] < 0.0 { 1.0 } else { -1.0 };
            vec![s, -s, s]
        });
        assert_eq!(mean_value(&alt), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        let g = make_grid(2, &[2, 2], &[1.0, 1.0]).unwrap();
        assert!(RealField::from_vec(&g, vec![0.0; 7]).is_err());
        assert!(RealField::from_vec(&g, vec![f64::NAN; 8]).is_err());
    }

    proptest! {
        #[test]
        fn lattice_is_bijection(n0 in 1usize..9, n1 in 1usize..9, n2 in 1usize..6) {
            let g = make_grid(3, &[n0, n1, n2], &[0.5, 1.0, 2.0]).unwrap();
            let lat = frequency_lattice(&g);
            let mut seen = vec![false; lat.len()];
            for bin in 0..lat.len() {
                let k = lat.frequency(bin).to_vec();
                for (a, &ka) in k.iter().enumerate() {
                    let n = g.counts()[a] as i64;
                    prop_assert!(-n < 2 * ka && 2 * ka <= n);
                }
                let back = lat.bin_of(&k).unwrap();
                prop_assert_eq!(back, bin);
                prop_assert!(!seen[back]);
                seen[back] = true;
                prop_assert_eq!(lat.partner(lat.partner(bin)), bin);
            }
        }

        #[test]
        fn inner_product_is_symmetric_and_positive(
            u in proptest::collection::vec(-10.0f64..10.0, 18),
            v in proptest::collection::vec(-10.0f64..10.0, 18),
        ) {
            let g = make_grid(2, &[3, 3], &[1.0, 1.0]).unwrap();
            let u = RealField::from_vec(&g, u).unwrap();
            let v = RealField::from_vec(&g, v).unwrap();
            prop_assert_eq!(inner_product(&u, &v).unwrap(), inner_product(&v, &u).unwrap());
            let uu = inner_product(&u, &u).unwrap();
            prop_assert!(uu >= 0.0);
            prop_assert_eq!(uu == 0.0, u.data().iter().all(|&x| x == 0.0));
        }

        #[test]
        fn mean_is_linear(
            u in proptest::collection::vec(-10.0f64..10.0, 18),
            v in proptest::collection::vec(-10.0f64..10.0, 18),
            s in -3.0f64..3.0,
        ) {
            let g = make_grid(2, &[3, 3], &[1.0, 1.0]).unwrap();
            let u = RealField::from_vec(&g, u).unwrap();
            let v = RealField::from_vec(&g, v).unwrap();
            let mut w = u.clone();
            w.axpy(s, &v);
            let (mu, mv, mw) = (mean_value(&u), mean_value(&v), mean_value(&w));
            for a in 0..2 {
                prop_assert!((mw[a] - (mu[a] + s * mv[a])).abs() < 1e-12);
            }
        }
    }
}

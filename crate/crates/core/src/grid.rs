//! Uniform periodic grids and second-order central differences on them.

use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;

/// A uniform periodic grid with `sizes[a]` nodes and spacing `spacing[a]`
/// along each of `dim` axes. Node indices are linear with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    sizes: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
}

impl PeriodicGrid {
    /// Grid on `[0, extent)^dim`.
    pub fn new(sizes: &[usize], extent: f64) -> Result<Self> {
        let dim = sizes.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension must be 1..=3, got {dim}")));
        }
        if sizes.iter().any(|&s| s < 4) {
            return Err(Error::InvalidInput(format!("grid needs at least 4 nodes per axis, got {sizes:?}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidInput(format!("grid extent must be positive, got {extent}")));
        }
        let mut s = [1; MAX_DIM];
        let mut h = [1.0; MAX_DIM];
        for a in 0..dim {
            s[a] = sizes[a];
            h[a] = extent / sizes[a] as f64;
        }
        Ok(Self { dim, sizes: s, spacing: h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn len(&self) -> usize {
        self.sizes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0; MAX_DIM];
        for a in 0..self.dim {
            m[a] = idx % self.sizes[a];
            idx /= self.sizes[a];
        }
        m
    }

    pub fn linear_index(&self, m: &[usize; MAX_DIM]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            idx = idx * self.sizes[a] + m[a];
        }
        idx
    }

    /// Parameter coordinates of a node.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        std::array::from_fn(|a| if a < self.dim { m[a] as f64 * self.spacing[a] } else { 0.0 })
    }

    /// Node reached by moving `offsets[a]` steps along each axis, together
    /// with the number of periods crossed per axis.
    pub fn offset(&self, idx: usize, offsets: [isize; MAX_DIM]) -> (usize, [i64; MAX_DIM]) {
        let mut m = self.multi_index(idx);
        let mut wraps = [0i64; MAX_DIM];
        for a in 0..self.dim {
            let s = self.sizes[a] as isize;
            let raw = m[a] as isize + offsets[a];
            wraps[a] = raw.div_euclid(s) as i64;
            m[a] = raw.rem_euclid(s) as usize;
        }
        (self.linear_index(&m), wraps)
    }

    #[inline]
    pub fn step(&self, idx: usize, axis: usize, by: isize) -> (usize, i64) {
        if self.dim == 1 {
            let s = self.sizes[0] as isize;
            let raw = idx as isize + by;
            if (0..s).contains(&raw) {
                return (raw as usize, 0);
            }
            return (raw.rem_euclid(s) as usize, raw.div_euclid(s) as i64);
        }
        let stride: usize = self.sizes[..axis].iter().product();
        let s = self.sizes[axis] as isize;
        let m = ((idx / stride) % self.sizes[axis]) as isize;
        let raw = m + by;
        let wrapped = raw.rem_euclid(s);
        let j = (idx as isize + (wrapped - m) * stride as isize) as usize;
        (j, raw.div_euclid(s) as i64)
    }

    /// Central first difference of a periodic scalar field.
    pub fn d1(&self, f: &[f64], idx: usize, axis: usize) -> f64 {
        let (p, _) = self.step(idx, axis, 1);
        let (m, _) = self.step(idx, axis, -1);
        (f[p] - f[m]) / (2.0 * self.spacing[axis])
    }

    /// Compact second difference (`a == b`) or four-point mixed difference.
    pub fn d2(&self, f: &[f64], idx: usize, a: usize, b: usize) -> f64 {
        if a == b {
            let (p, _) = self.step(idx, a, 1);
            let (m, _) = self.step(idx, a, -1);
            (f[p] - 2.0 * f[idx] + f[m]) / (self.spacing[a] * self.spacing[a])
        } else {
            let at = |sa: isize, sb: isize| {
                let mut o = [0; MAX_DIM];
                o[a] = sa;
                o[b] = sb;
                f[self.offset(idx, o).0]
            };
            (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * self.spacing[a] * self.spacing[b])
        }
    }
}

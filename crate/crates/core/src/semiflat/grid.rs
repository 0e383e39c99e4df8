//! Uniform periodic grids on `T³ = [0,1)³` and scalar fields on them.

use std::sync::Arc;

use crate::error::SemiflatError;
use crate::exterior::Coefficient;
use crate::scalar::Real;

/// `n` points per axis, spacing `h = 1/n`, row-major in `x¹x²x³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, SemiflatError> {
        if n < 8 {
            return Err(SemiflatError::GridTooSmall(n));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h<T: Real>(&self) -> T {
        T::one() / T::lit(self.n as f64)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    pub fn point<T: Real>(&self, idx: usize) -> [T; 3] {
        let h = self.h::<T>();
        self.multi_index(idx).map(|i| h * T::lit(i as f64))
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            _ => 1,
        }
    }

    /// Index shifted by `s` (±1 or 0) along `axis`, wrapped periodically.
    #[inline]
    fn shifted(&self, idx: usize, axis: usize, s: isize) -> usize {
        let m = self.multi_index(idx)[axis] as isize;
        let w = (m + s).rem_euclid(self.n as isize) as usize;
        idx - (m as usize) * self.stride(axis) + w * self.stride(axis)
    }
}

/// Either a constant or a sampled periodic field.
#[derive(Clone, Debug)]
pub enum FieldData<T: Real> {
    Uniform(T),
    Values(Arc<Vec<T>>),
}

/// Scalar field on a [`Grid`]; derivatives are second-order central
/// differences with periodic wrap.
#[derive(Clone, Debug)]
pub struct GridField<T: Real> {
    grid: Grid,
    data: FieldData<T>,
}

impl<T: Real> GridField<T> {
    pub fn uniform(grid: Grid, c: T) -> Self {
        GridField { grid, data: FieldData::Uniform(c) }
    }

    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self, SemiflatError> {
        if values.len() != grid.len() {
            return Err(SemiflatError::Shape);
        }
        Ok(GridField { grid, data: FieldData::Values(Arc::new(values)) })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([T; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridField { grid, data: FieldData::Values(Arc::new(values)) }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &FieldData<T> {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: usize) -> T {
        match &self.data {
            FieldData::Uniform(c) => *c,
            FieldData::Values(v) => v[idx],
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        (0..self.grid.len()).map(|i| self.at(i)).collect()
    }

    pub fn min(&self) -> T {
        match &self.data {
            FieldData::Uniform(c) => *c,
            FieldData::Values(v) => v.iter().copied().fold(v[0], |a, b| a.min(b)),
        }
    }

    pub fn max(&self) -> T {
        match &self.data {
            FieldData::Uniform(c) => *c,
            FieldData::Values(v) => v.iter().copied().fold(v[0], |a, b| a.max(b)),
        }
    }

    /// `sqrt(h³ Σ f²)`, the discrete `L²(T³)` norm.
    pub fn l2_sq(&self) -> T {
        let vol = self.grid.h::<T>().powi(3);
        match &self.data {
            FieldData::Uniform(c) => *c * *c,
            FieldData::Values(v) => v.iter().fold(T::zero(), |a, x| a + *x * *x) * vol,
        }
    }

    fn zip(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.grid, rhs.grid);
        let data = match (&self.data, &rhs.data) {
            (FieldData::Uniform(a), FieldData::Uniform(b)) => FieldData::Uniform(f(*a, *b)),
            (FieldData::Uniform(a), FieldData::Values(v)) => {
                FieldData::Values(Arc::new(v.iter().map(|b| f(*a, *b)).collect()))
            }
            (FieldData::Values(v), FieldData::Uniform(b)) => {
                FieldData::Values(Arc::new(v.iter().map(|a| f(*a, *b)).collect()))
            }
            (FieldData::Values(u), FieldData::Values(v)) => {
                FieldData::Values(Arc::new(u.iter().zip(v.iter()).map(|(a, b)| f(*a, *b)).collect()))
            }
        };
        GridField { grid: self.grid, data }
    }

    fn stencil(&self, f: impl Fn(&[T], usize) -> T) -> Option<Self> {
        match &self.data {
            FieldData::Uniform(_) => None,
            FieldData::Values(v) => {
                let out = (0..self.grid.len()).map(|i| f(v, i)).collect();
                Some(GridField { grid: self.grid, data: FieldData::Values(Arc::new(out)) })
            }
        }
    }

    /// Compact second difference: `(f₊ − 2f + f₋)/h²` on the diagonal and
    /// the four-point cross stencil `/(4h²)` off it.
    pub fn second_partial(&self, a: usize, b: usize) -> Option<Self> {
        let g = self.grid;
        let h = g.h::<T>();
        if a == b {
            let inv = T::one() / (h * h);
            let two = T::lit(2.0);
            self.stencil(|v, i| (v[g.shifted(i, a, 1)] - two * v[i] + v[g.shifted(i, a, -1)]) * inv)
        } else {
            let inv = T::one() / (T::lit(4.0) * h * h);
            self.stencil(|v, i| {
                let p = g.shifted(i, a, 1);
                let m = g.shifted(i, a, -1);
                (v[g.shifted(p, b, 1)] - v[g.shifted(p, b, -1)] - v[g.shifted(m, b, 1)] + v[g.shifted(m, b, -1)])
                    * inv
            })
        }
    }

    /// Second derivative, or the zero field for constants.
    pub fn second_partial_or_zero(&self, a: usize, b: usize) -> Self {
        self.second_partial(a, b).unwrap_or_else(|| GridField::uniform(self.grid, T::zero()))
    }

    pub fn partial_or_zero(&self, axis: usize) -> Self {
        self.partial(axis).unwrap_or_else(|| GridField::uniform(self.grid, T::zero()))
    }
}

impl<T: Real> Coefficient for GridField<T> {
    type Scalar = T;

    fn plus(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    fn minus(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }

    fn times(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a * b)
    }

    fn negate(&self) -> Self {
        self.map(|x| -x)
    }

    fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        let data = match &self.data {
            FieldData::Uniform(c) => FieldData::Uniform(f(*c)),
            FieldData::Values(v) => FieldData::Values(Arc::new(v.iter().map(|x| f(*x)).collect())),
        };
        GridField { grid: self.grid, data }
    }

    /// `(f(x + h e_axis) − f(x − h e_axis)) / 2h`.
    fn partial(&self, axis: usize) -> Option<Self> {
        let g = self.grid;
        let inv = T::one() / (T::lit(2.0) * g.h::<T>());
        self.stencil(|v, i| (v[g.shifted(i, axis, 1)] - v[g.shifted(i, axis, -1)]) * inv)
    }

    fn max_abs(&self) -> T {
        match &self.data {
            FieldData::Uniform(c) => c.abs(),
            FieldData::Values(v) => v.iter().fold(T::zero(), |a, x| a.max(x.abs())),
        }
    }
}

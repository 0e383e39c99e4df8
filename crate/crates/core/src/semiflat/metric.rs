//! Periodic Hessian metrics `g_jk = ∂_j∂_k Φ` on `T³` and their flows
//! `∂_t g = ¼D² det g` and `∂_t g = ½D² log det g`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridField};
use crate::error::SemiflatError;
use crate::exterior::Coefficient;
use crate::flows::Weight;
use crate::scalar::Real;

/// Position of `(j, k)` in the packed upper triangle `11,12,13,22,23,33`.
#[inline]
pub fn packed(j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

pub const COMPONENT_NAMES: [&str; 6] = ["g11", "g12", "g13", "g22", "g23", "g33"];

/// Symmetric `3×3` matrix field stored as six packed components.
#[derive(Clone, Debug)]
pub struct HessianMetricField<T: Real> {
    grid: Grid,
    comps: [GridField<T>; 6],
}

impl<T: Real> HessianMetricField<T> {
    pub fn new(grid: Grid, comps: [GridField<T>; 6]) -> Result<Self, SemiflatError> {
        if comps.iter().any(|c| c.grid() != grid) {
            return Err(SemiflatError::Shape);
        }
        Ok(HessianMetricField { grid, comps })
    }

    /// Constant metric `A`.
    pub fn constant(grid: Grid, a: [[T; 3]; 3]) -> Self {
        let comps = std::array::from_fn(|p| {
            let (j, k) = unpacked(p);
            GridField::from_fn(grid, |_| a[j][k])
        });
        HessianMetricField { grid, comps }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, j: usize, k: usize) -> &GridField<T> {
        &self.comps[packed(j, k)]
    }

    pub fn components(&self) -> &[GridField<T>; 6] {
        &self.comps
    }

    pub fn matrix_at(&self, idx: usize) -> [[T; 3]; 3] {
        std::array::from_fn(|j| std::array::from_fn(|k| self.component(j, k).at(idx)))
    }

    fn pointwise(&self, f: impl Fn([[T; 3]; 3]) -> T) -> GridField<T> {
        let v = (0..self.grid.len()).map(|i| f(self.matrix_at(i))).collect();
        GridField::from_values(self.grid, v).expect("grid length")
    }

    pub fn det(&self) -> GridField<T> {
        self.pointwise(|m| det3(&m))
    }

    /// Packed components of `g^{-1}`.
    pub fn inverse(&self) -> Result<HessianMetricField<T>, SemiflatError> {
        self.check_positive()?;
        let comps = std::array::from_fn(|p| {
            let (j, k) = unpacked(p);
            self.pointwise(|m| inverse3(&m)[j][k])
        });
        Ok(HessianMetricField { grid: self.grid, comps })
    }

    /// Sylvester's criterion at every grid point.
    pub fn check_positive(&self) -> Result<(), SemiflatError> {
        for i in 0..self.grid.len() {
            let m = self.matrix_at(i);
            let m2 = m[0][0] * m[1][1] - m[0][1] * m[0][1];
            let d = det3(&m);
            if !(m[0][0] > T::zero() && m2 > T::zero() && d > T::zero()) {
                return Err(SemiflatError::PositivityLost { index: self.grid.multi_index(i), det: d.as_f64() });
            }
        }
        Ok(())
    }

    /// `self + s·other` componentwise.
    pub fn axpy(&self, s: T, other: &HessianMetricField<T>) -> Self {
        let comps = std::array::from_fn(|p| self.comps[p].plus(&other.comps[p].scale(s)));
        HessianMetricField { grid: self.grid, comps }
    }

    pub fn max_abs_diff(&self, other: &HessianMetricField<T>) -> T {
        (0..6).fold(T::zero(), |a, p| a.max(self.comps[p].minus(&other.comps[p]).max_abs()))
    }
}

fn unpacked(p: usize) -> (usize, usize) {
    [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)][p]
}

pub fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inverse3<T: Real>(m: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let d = det3(m);
    let c = |a: usize, b: usize, p: usize, q: usize| m[a][b] * m[p][q] - m[a][q] * m[p][b];
    [
        [c(1, 1, 2, 2) / d, -c(0, 1, 2, 2) / d, c(0, 1, 1, 2) / d],
        [-c(1, 0, 2, 2) / d, c(0, 0, 2, 2) / d, -c(0, 0, 1, 2) / d],
        [c(1, 0, 2, 1) / d, -c(0, 0, 2, 1) / d, c(0, 0, 1, 1) / d],
    ]
}

/// One term `ε cos(2π k·x + θ)` of the periodic part of the potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: [i32; 3],
    pub eps: f64,
    #[serde(default)]
    pub theta: f64,
}

/// `Φ = ½ xᵀAx + Σ ε cos(2π k·x + θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    #[serde(default = "identity")]
    pub a: [[f64; 3]; 3],
    #[serde(default)]
    pub modes: Vec<Mode>,
}

fn identity() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

impl Default for Potential {
    fn default() -> Self {
        Potential { a: identity(), modes: vec![Mode { k: [1, 0, 0], eps: 1e-2, theta: 0.0 }] }
    }
}

impl Potential {
    pub fn flat() -> Self {
        Potential { a: identity(), modes: Vec::new() }
    }

    /// Requires `A` symmetric positive definite and
    /// `Σ|ε|(2π|k|)² < λ_min(A)/2`.
    pub fn validate(&self) -> Result<(), SemiflatError> {
        let a = nalgebra::Matrix3::from_fn(|i, j| self.a[i][j]);
        if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(SemiflatError::InitialData("A is not symmetric".into()));
        }
        let lmin = a.symmetric_eigenvalues().min();
        if !(lmin > 0.0) {
            return Err(SemiflatError::InitialData(format!("A is not positive definite (min eigenvalue {lmin})")));
        }
        let bound: f64 = self
            .modes
            .iter()
            .map(|m| {
                let k2: f64 = m.k.iter().map(|&x| (x as f64).powi(2)).sum();
                m.eps.abs() * 4.0 * PI * PI * k2
            })
            .sum();
        if !(bound < lmin / 2.0) {
            return Err(SemiflatError::InitialData(format!(
                "sum |eps| (2 pi |k|)^2 = {bound} is not below lambda_min(A)/2 = {}",
                lmin / 2.0
            )));
        }
        Ok(())
    }

    /// Exact Hessian sampled on the grid.
    pub fn hessian<T: Real>(&self, grid: Grid) -> Result<HessianMetricField<T>, SemiflatError> {
        self.validate()?;
        let comps = std::array::from_fn(|p| {
            let (j, k) = unpacked(p);
            GridField::from_fn(grid, |x: [T; 3]| {
                let mut v = self.a[j][k];
                let x = x.map(|c| c.as_f64());
                for m in &self.modes {
                    let kx: f64 = (0..3).map(|i| m.k[i] as f64 * x[i]).sum();
                    let c = 4.0 * PI * PI * m.k[j] as f64 * m.k[k] as f64;
                    v -= m.eps * c * (2.0 * PI * kx + m.theta).cos();
                }
                T::lit(v)
            })
        });
        Ok(HessianMetricField { grid, comps })
    }
}

/// The two semi-flat metric flows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemiflatFlow {
    /// `∂_t g = ¼ D² det g`, dual to the Type IIA flow.
    Iib,
    /// `∂_t g = ½ D² log det g`, dual to the dual Ricci flow.
    Kr,
}

impl SemiflatFlow {
    pub fn name(&self) -> &'static str {
        match self {
            SemiflatFlow::Iib => "iib",
            SemiflatFlow::Kr => "kr",
        }
    }

    /// The dual 3-form flow is `∂_t φ = c · dΛd(w(|φ|²) φ̂)`; returns `(w, c)`.
    pub fn dual_weight<T: Real>(&self) -> (Weight, T) {
        match self {
            SemiflatFlow::Iib => (Weight::TypeIIA, T::one()),
            SemiflatFlow::Kr => (Weight::DualRicci, T::lit(0.5)),
        }
    }

    pub fn rhs<T: Real>(&self, g: &HessianMetricField<T>) -> HessianMetricField<T> {
        match self {
            SemiflatFlow::Iib => iib_rhs(g),
            SemiflatFlow::Kr => kr_rhs(g),
        }
    }
}

impl fmt::Display for SemiflatFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemiflatFlow {
    type Err = SemiflatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iib" => Ok(SemiflatFlow::Iib),
            "kr" => Ok(SemiflatFlow::Kr),
            other => Err(SemiflatError::InitialData(format!("unknown semi-flat flow `{other}`"))),
        }
    }
}

fn hessian_of<T: Real>(f: &GridField<T>, c: T) -> HessianMetricField<T> {
    let comps = std::array::from_fn(|p| {
        let (j, k) = unpacked(p);
        f.second_partial_or_zero(j, k).scale(c)
    });
    HessianMetricField { grid: f.grid(), comps }
}

/// `¼ D²_{jk} det g` with compact stencils.
pub fn iib_rhs<T: Real>(g: &HessianMetricField<T>) -> HessianMetricField<T> {
    hessian_of(&g.det(), T::lit(0.25))
}

/// `½ D²_{jk} log det g` with compact stencils.
pub fn kr_rhs<T: Real>(g: &HessianMetricField<T>) -> HessianMetricField<T> {
    hessian_of(&g.det().map(|d| d.ln()), T::lit(0.5))
}

/// Parabolic stability bound `0.1 h² / max det g`.
pub fn cfl_bound<T: Real>(g: &HessianMetricField<T>) -> T {
    let h = g.grid().h::<T>();
    T::lit(0.1) * h * h / g.det().max()
}

/// One classical RK4 step; fails if the result is not positive definite.
pub fn rk4_step<T: Real>(
    flow: SemiflatFlow,
    g: &HessianMetricField<T>,
    dt: T,
) -> Result<HessianMetricField<T>, SemiflatError> {
    let half = T::lit(0.5);
    let k1 = flow.rhs(g);
    let k2 = flow.rhs(&g.axpy(half * dt, &k1));
    let k3 = flow.rhs(&g.axpy(half * dt, &k2));
    let k4 = flow.rhs(&g.axpy(dt, &k3));
    let sixth = dt / T::lit(6.0);
    let third = dt / T::lit(3.0);
    let out = g.axpy(sixth, &k1).axpy(third, &k2).axpy(third, &k3).axpy(sixth, &k4);
    out.check_positive()?;
    Ok(out)
}

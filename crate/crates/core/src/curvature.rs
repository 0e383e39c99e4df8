//! Left-invariant curvature on a metric Lie frame: Levi-Civita connection
//! by the Koszul formula, Riemann, Ricci and scalar curvature, and the
//! Nijenhuis tensor of an almost complex structure with its quadratic
//! contractions.

use nalgebra::Matrix6;

use crate::error::GeometryError;
use crate::exterior::{checked_inverse_metric, Frame, DIM};
use crate::hitchin::TypeIIAStructure;
use crate::scalar::Real;

pub type Tensor3<T> = [[[T; DIM]; DIM]; DIM];
pub type Tensor4<T> = [[[[T; DIM]; DIM]; DIM]; DIM];

fn zeros3<T: Real>() -> Tensor3<T> {
    [[[T::zero(); DIM]; DIM]; DIM]
}

/// A constant-coefficient frame with a left-invariant metric and an
/// optional compatible almost complex structure.
#[derive(Clone, Debug)]
pub struct MetricLieFrame<T: Real> {
    /// `[e_i, e_j] = Σ_k c[k][i][j] e_k`.
    structure: Tensor3<T>,
    g: Matrix6<T>,
    g_inv: Matrix6<T>,
    j: Option<Matrix6<T>>,
}

/// [`MetricLieFrame::levi_civita`] output: `gamma[i][j][k]` is the `e_k`
/// component of `∇_{e_i} e_j`.
#[derive(Clone, Debug)]
pub struct Connection<T: Real> {
    pub gamma: Tensor3<T>,
    pub torsion_residual: T,
    pub metric_residual: T,
}

#[derive(Clone, Debug)]
pub struct CurvatureTensors<T: Real> {
    /// `riemann[i][j][k][l] = e^l(R(e_i, e_j) e_k)`.
    pub riemann: Tensor4<T>,
    pub ricci: Matrix6<T>,
    pub scalar: T,
}

#[derive(Clone, Debug)]
pub struct Nijenhuis<T: Real> {
    /// `upper[k][i][j] = e^k(N(e_i, e_j))`.
    pub upper: Tensor3<T>,
    /// `lowered[k][i][j] = g(e_k, N(e_i, e_j))`.
    pub lowered: Tensor3<T>,
    pub norm_sq: T,
    pub plus_sq: Matrix6<T>,
    pub minus_sq: Matrix6<T>,
}

/// Structure constants from the differential table: with
/// `de^k = Σ_{i<j} D^k_{ij} e^{ij}` one has `[e_i, e_j] = −Σ_k D^k_{ij} e_k`.
pub fn structure_constants<T: Real>(frame: &Frame<T>) -> Tensor3<T> {
    let mut c = zeros3();
    for k in 0..DIM {
        for (b, v) in frame.differential(k).terms() {
            let ij: Vec<usize> = b.indices().collect();
            let (i, j) = (ij[0], ij[1]);
            c[k][i][j] = -*v;
            c[k][j][i] = *v;
        }
    }
    c
}

impl<T: Real> MetricLieFrame<T> {
    pub fn new(frame: &Frame<T>, g: Matrix6<T>, j: Option<Matrix6<T>>) -> Result<Self, GeometryError> {
        let g_inv = checked_inverse_metric(&g).map_err(|_| GeometryError::SingularMetric)?;
        if let Some(j) = &j {
            let compat = (j.transpose() * g * j - g).amax();
            if compat > T::lit(1e-10) * g.amax() {
                return Err(GeometryError::InvalidAnsatz("J-compatible with the metric"));
            }
        }
        Ok(MetricLieFrame { structure: structure_constants(frame), g, g_inv, j })
    }

    /// `g = g_φ` and `J = J_φ` of a Type IIA structure.
    pub fn from_structure(frame: &Frame<T>, s: &TypeIIAStructure<T>) -> Result<Self, GeometryError> {
        Self::new(frame, *s.g(), Some(*s.j()))
    }

    pub fn g(&self) -> &Matrix6<T> {
        &self.g
    }

    pub fn j(&self) -> Option<&Matrix6<T>> {
        self.j.as_ref()
    }

    pub fn bracket(&self, u: &[T; DIM], v: &[T; DIM]) -> [T; DIM] {
        let mut w = [T::zero(); DIM];
        for (k, wk) in w.iter_mut().enumerate() {
            let mut acc = T::zero();
            for i in 0..DIM {
                if u[i] == T::zero() {
                    continue;
                }
                for j in 0..DIM {
                    acc += self.structure[k][i][j] * u[i] * v[j];
                }
            }
            *wk = acc;
        }
        w
    }

    fn inner(&self, u: &[T; DIM], v: &[T; DIM]) -> T {
        let mut acc = T::zero();
        for a in 0..DIM {
            for b in 0..DIM {
                acc += u[a] * self.g[(a, b)] * v[b];
            }
        }
        acc
    }

    fn c_vec(&self, i: usize, j: usize) -> [T; DIM] {
        let mut v = [T::zero(); DIM];
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = self.structure[k][i][j];
        }
        v
    }

    /// Koszul formula
    /// `2g(∇_i e_j, e_k) = g([e_i,e_j],e_k) − g([e_j,e_k],e_i) + g([e_k,e_i],e_j)`.
    pub fn levi_civita(&self) -> Connection<T> {
        let half = T::lit(0.5);
        let mut c = [[[T::zero(); DIM]; DIM]; DIM];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                *cij = self.c_vec(i, j);
            }
        }
        let unit = |k: usize| {
            let mut v = [T::zero(); DIM];
            v[k] = T::one();
            v
        };
        let mut gamma = zeros3();
        for i in 0..DIM {
            for j in 0..DIM {
                let mut low = [T::zero(); DIM];
                for k in 0..DIM {
                    low[k] = half
                        * (self.inner(&c[i][j], &unit(k)) - self.inner(&c[j][k], &unit(i))
                            + self.inner(&c[k][i], &unit(j)));
                }
                for m in 0..DIM {
                    let mut acc = T::zero();
                    for k in 0..DIM {
                        acc += self.g_inv[(m, k)] * low[k];
                    }
                    gamma[i][j][m] = acc;
                }
            }
        }
        let mut torsion = T::zero();
        let mut metric = T::zero();
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    torsion = torsion.max((gamma[i][j][k] - gamma[j][i][k] - c[i][j][k]).abs());
                    let lhs = self.inner(&gamma[i][j], &unit(k)) + self.inner(&unit(j), &gamma[i][k]);
                    metric = metric.max(lhs.abs());
                }
            }
        }
        Connection { gamma, torsion_residual: torsion, metric_residual: metric }
    }

    /// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`, `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`.
    pub fn curvature_tensors(&self) -> CurvatureTensors<T> {
        let conn = self.levi_civita();
        // nabla[i][(n, m)] = e^n(∇_i e_m)
        let nabla: Vec<Matrix6<T>> = (0..DIM)
            .map(|i| Matrix6::from_fn(|n, m| conn.gamma[i][m][n]))
            .collect();
        let mut riemann = [[[[T::zero(); DIM]; DIM]; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let mut r = nabla[i] * nabla[j] - nabla[j] * nabla[i];
                for (m, nm) in nabla.iter().enumerate() {
                    let cm = self.structure[m][i][j];
                    if cm != T::zero() {
                        r -= nm * cm;
                    }
                }
                for k in 0..DIM {
                    for l in 0..DIM {
                        riemann[i][j][k][l] = r[(l, k)];
                    }
                }
            }
        }
        let ricci = Matrix6::from_fn(|j, k| {
            let mut acc = T::zero();
            for (i, ri) in riemann.iter().enumerate() {
                acc += ri[j][k][i];
            }
            acc
        });
        let scalar = (self.g_inv * ricci).trace();
        CurvatureTensors { riemann, ricci, scalar }
    }

    /// `N(X,Y) = ¼([JX,JY] − J[JX,Y] − J[X,JY] − [X,Y])` with
    /// `(N₊²)_{ij} = N^{pk}{}_i N_{pkj}`, `(N₋²)_{ij} = N^{kp}{}_i N_{pkj}`.
    pub fn nijenhuis(&self) -> Result<Nijenhuis<T>, GeometryError> {
        let j = self.j.ok_or(GeometryError::MissingJ)?;
        let quarter = T::lit(0.25);
        let col = |i: usize| -> [T; DIM] {
            let mut v = [T::zero(); DIM];
            for (a, va) in v.iter_mut().enumerate() {
                *va = j[(a, i)];
            }
            v
        };
        let apply_j = |v: &[T; DIM]| -> [T; DIM] {
            let mut w = [T::zero(); DIM];
            for (a, wa) in w.iter_mut().enumerate() {
                for (b, vb) in v.iter().enumerate() {
                    *wa += j[(a, b)] * *vb;
                }
            }
            w
        };
        let unit = |k: usize| {
            let mut v = [T::zero(); DIM];
            v[k] = T::one();
            v
        };
        let mut upper = zeros3();
        for a in 0..DIM {
            for b in 0..DIM {
                let (x, y) = (unit(a), unit(b));
                let (jx, jy) = (col(a), col(b));
                let t1 = self.bracket(&jx, &jy);
                let t2 = apply_j(&self.bracket(&jx, &y));
                let t3 = apply_j(&self.bracket(&x, &jy));
                let t4 = self.bracket(&x, &y);
                for k in 0..DIM {
                    upper[k][a][b] = quarter * (t1[k] - t2[k] - t3[k] - t4[k]);
                }
            }
        }
        let mut lowered = zeros3();
        for k in 0..DIM {
            for a in 0..DIM {
                for b in 0..DIM {
                    let mut acc = T::zero();
                    for m in 0..DIM {
                        acc += self.g[(k, m)] * upper[m][a][b];
                    }
                    lowered[k][a][b] = acc;
                }
            }
        }
        let gi = &self.g_inv;
        // fully raised copy: raised[a][b][c] = g^{ap} g^{bq} g^{cr} T_{pqr}
        let mut raised = zeros3();
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    let mut acc = T::zero();
                    for p in 0..DIM {
                        for q in 0..DIM {
                            let gpq = gi[(a, p)] * gi[(b, q)];
                            if gpq == T::zero() {
                                continue;
                            }
                            for r in 0..DIM {
                                acc += gpq * gi[(c, r)] * lowered[p][q][r];
                            }
                        }
                    }
                    raised[a][b][c] = acc;
                }
            }
        }
        let mut norm_sq = T::zero();
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    norm_sq += lowered[a][b][c] * raised[a][b][c];
                }
            }
        }
        // first two slots raised: up2[a][b][i] = g^{ap} g^{bk} T_{pki}
        let mut up2 = zeros3();
        for a in 0..DIM {
            for b in 0..DIM {
                for i in 0..DIM {
                    let mut acc = T::zero();
                    for p in 0..DIM {
                        for k in 0..DIM {
                            acc += gi[(a, p)] * gi[(b, k)] * lowered[p][k][i];
                        }
                    }
                    up2[a][b][i] = acc;
                }
            }
        }
        let plus_sq = Matrix6::from_fn(|i, jj| {
            let mut acc = T::zero();
            for p in 0..DIM {
                for k in 0..DIM {
                    acc += up2[p][k][i] * lowered[p][k][jj];
                }
            }
            acc
        });
        let minus_sq = Matrix6::from_fn(|i, jj| {
            let mut acc = T::zero();
            for p in 0..DIM {
                for k in 0..DIM {
                    acc += up2[k][p][i] * lowered[p][k][jj];
                }
            }
            acc
        });
        Ok(Nijenhuis { upper, lowered, norm_sq, plus_sq, minus_sq })
    }

    /// `−R_{ij} + R_{Ji,Jj}`.
    pub fn anti_complexified_ricci(&self) -> Result<Matrix6<T>, GeometryError> {
        let j = self.j.ok_or(GeometryError::MissingJ)?;
        let ric = self.curvature_tensors().ricci;
        Ok(-ric + j.transpose() * ric * j)
    }
}

/// Largest violation of the algebraic Riemann symmetries: antisymmetry in
/// both pairs, pair symmetry, and the first Bianchi identity.
pub fn bianchi_residual<T: Real>(c: &CurvatureTensors<T>, g: &Matrix6<T>) -> T {
    let low = |i: usize, j: usize, k: usize, l: usize| {
        let mut acc = T::zero();
        for m in 0..DIM {
            acc += c.riemann[i][j][k][m] * g[(m, l)];
        }
        acc
    };
    let mut worst = T::zero();
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    let r = low(i, j, k, l);
                    worst = worst.max((r + low(j, i, k, l)).abs());
                    worst = worst.max((r + low(i, j, l, k)).abs());
                    worst = worst.max((r - low(k, l, i, j)).abs());
                }
                for l in 0..DIM {
                    let cyc = c.riemann[i][j][k][l] + c.riemann[j][k][i][l] + c.riemann[k][i][j][l];
                    worst = worst.max(cyc.abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::standard_j;
    use crate::homogeneous::{nilmanifold_ansatz, preset, solvmanifold_ansatz, Preset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nil_structure(a: f64, b: f64) -> (Frame<f64>, TypeIIAStructure<f64>) {
        let f = preset::<f64>(Preset::NilmanifoldDbt).unwrap().frame;
        let phi = nilmanifold_ansatz().form(&[a, b]).unwrap();
        let s = TypeIIAStructure::on_frame(&f, phi).unwrap();
        (f, s)
    }

    fn solv_structure(p: [f64; 4]) -> (Frame<f64>, TypeIIAStructure<f64>) {
        let f = preset::<f64>(Preset::SolvmanifoldTv).unwrap().frame;
        let phi = solvmanifold_ansatz().form(&p).unwrap();
        let s = TypeIIAStructure::on_frame(&f, phi).unwrap();
        (f, s)
    }

    #[test]
    fn brackets_from_table() {
        let f = preset::<f64>(Preset::NilmanifoldDbt).unwrap().frame;
        let c = structure_constants(&f);
        // de⁴ = e^{15} ⇒ [e_1, e_5] = −e_4
        assert_eq!(c[3][0][4], -1.0);
        assert_eq!(c[3][4][0], 1.0);
    }

    #[test]
    fn flat_torus() {
        let f = preset::<f64>(Preset::Torus).unwrap().frame;
        let m = MetricLieFrame::new(&f, Matrix6::identity(), Some(standard_j())).unwrap();
        let conn = m.levi_civita();
        assert!(conn.gamma.iter().flatten().flatten().all(|x| *x == 0.0));
        let c = m.curvature_tensors();
        assert_eq!(c.scalar, 0.0);
        assert_eq!(c.ricci, Matrix6::zeros());
        assert_eq!(m.nijenhuis().unwrap().norm_sq, 0.0);
    }

    #[test]
    fn connection_self_consistency() {
        for (f, s) in [nil_structure(0.0, 0.0), solv_structure([1.0, 1.0, 1.0, 1.0])] {
            let m = MetricLieFrame::from_structure(&f, &s).unwrap();
            let conn = m.levi_civita();
            assert!(conn.torsion_residual < 1e-12);
            assert!(conn.metric_residual < 1e-12);
            assert!(bianchi_residual(&m.curvature_tensors(), m.g()) < 1e-12);
            let ric = m.curvature_tensors().ricci;
            assert!((ric - ric.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn nilmanifold_calibration() {
        let (f, s) = nil_structure(0.0, 0.0);
        let m = MetricLieFrame::from_structure(&f, &s).unwrap();
        let n = m.nijenhuis().unwrap();
        assert!((n.norm_sq - 1.0).abs() < 1e-12);
        assert!((m.curvature_tensors().scalar + 1.0).abs() < 1e-12);
    }

    #[test]
    fn nilmanifold_norm_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let b: f64 = rng.gen_range(-1.5..1.5);
            let a: f64 = b * b - 1.0 + rng.gen_range(0.05..4.0);
            let (f, s) = nil_structure(a, b);
            let m = MetricLieFrame::from_structure(&f, &s).unwrap();
            let n = m.nijenhuis().unwrap();
            let expected = (1.0 + a - b * b).powf(-1.5);
            assert!((n.norm_sq - expected).abs() < 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn nijenhuis_symmetries() {
        let (f, s) = solv_structure([0.7, 1.3, 2.1, 0.4]);
        let m = MetricLieFrame::from_structure(&f, &s).unwrap();
        let n = m.nijenhuis().unwrap();
        let j = s.j();
        for i in 0..6 {
            for jj in 0..6 {
                for k in 0..6 {
                    assert!((n.upper[k][i][jj] + n.upper[k][jj][i]).abs() < 1e-12);
                    // N(J e_i, e_j) = −J N(e_i, e_j)
                    let mut lhs = 0.0;
                    let mut rhs = 0.0;
                    for a in 0..6 {
                        lhs += j[(a, i)] * n.upper[k][a][jj];
                        rhs -= j[(k, a)] * n.upper[a][i][jj];
                    }
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn missing_j_reported() {
        let f = preset::<f64>(Preset::Torus).unwrap().frame;
        let m = MetricLieFrame::new(&f, Matrix6::identity(), None).unwrap();
        assert!(matches!(m.nijenhuis(), Err(GeometryError::MissingJ)));
    }

    #[test]
    fn singular_metric_rejected() {
        let f = preset::<f64>(Preset::Torus).unwrap().frame;
        let mut g = Matrix6::identity();
        g[(2, 2)] = 0.0;
        assert!(matches!(MetricLieFrame::new(&f, g, None), Err(GeometryError::SingularMetric)));
    }
}

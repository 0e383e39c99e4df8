use nalgebra::Matrix6;

use super::form::{checked_inverse_metric, minor_det, Blade, Form, DIM};
use super::ring::Coefficient;
use crate::error::ExteriorError;
use crate::scalar::Real;

/// `ω = e^{12} + e^{34} + e^{56}`.
pub fn standard_omega<T: Real>() -> Form<T> {
    Form::from_terms(
        2,
        [[1, 2], [3, 4], [5, 6]].iter().map(|l| (Blade::from_labels(l).unwrap(), T::one())),
    )
}

/// Antisymmetric matrix `Ω_ij = ω(e_i, e_j)` of a constant 2-form.
pub fn two_form_matrix<T: Real>(omega: &Form<T>) -> Matrix6<T> {
    let mut m = Matrix6::zeros();
    for (b, c) in omega.terms() {
        let ij: Vec<usize> = b.indices().collect();
        m[(ij[0], ij[1])] = *c;
        m[(ij[1], ij[0])] = -*c;
    }
    m
}

/// Coefficient of `ω³/3!` on `e^{123456}`.
pub fn symplectic_volume<T: Real>(omega: &Form<T>) -> T {
    let w2 = omega.wedge(omega).expect("2+2 <= 6");
    let w3 = w2.wedge(omega).expect("4+2 <= 6");
    w3.get(Blade::TOP) / T::lit(6.0)
}

/// A 6-dimensional coframe `e^1..e^6` with its differential table and a
/// constant symplectic form. Field-valued coefficients differentiate along
/// `coordinate_axes[j] ↔ dx^{j+1}`.
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    differentials: [Form<T>; DIM],
    omega: Form<T>,
    omega_matrix: Matrix6<T>,
    poisson: Matrix6<T>,
    volume: T,
    blade_d: Vec<Form<T>>,
    coordinate_axes: [usize; 3],
}

impl<T: Real> Frame<T> {
    /// Validates non-degeneracy, `dω = 0` and `d² = 0` on the coframe.
    pub fn new(differentials: [Form<T>; DIM], omega: Form<T>) -> Result<Self, ExteriorError> {
        Self::with_axes(differentials, omega, [0, 2, 4])
    }

    pub fn with_axes(
        differentials: [Form<T>; DIM],
        omega: Form<T>,
        coordinate_axes: [usize; 3],
    ) -> Result<Self, ExteriorError> {
        if let Some(bad) = differentials.iter().position(|f| f.degree() != 2) {
            return Err(ExteriorError::InvalidFrame(format!("d e^{} is not a 2-form", bad + 1)));
        }
        if omega.degree() != 2 {
            return Err(ExteriorError::InvalidFrame("omega is not a 2-form".into()));
        }
        if coordinate_axes.iter().any(|&a| a >= DIM) {
            return Err(ExteriorError::InvalidFrame("coordinate axis out of range".into()));
        }
        let omega_matrix = two_form_matrix(&omega);
        let inv = omega_matrix.try_inverse().ok_or(ExteriorError::DegenerateOmega)?;
        if !inv.iter().all(|x| x.is_finite()) {
            return Err(ExteriorError::DegenerateOmega);
        }
        let volume = symplectic_volume(&omega);
        if volume.abs() <= T::tol() {
            return Err(ExteriorError::DegenerateOmega);
        }
        let blade_d = (0u8..64)
            .map(|bits| blade_differential(&differentials, Blade::from_bits(bits)))
            .collect();
        let frame = Frame {
            differentials,
            omega,
            omega_matrix,
            poisson: inv.transpose(),
            volume,
            blade_d,
            coordinate_axes,
        };
        let scale = frame
            .differentials
            .iter()
            .map(|f| f.max_abs())
            .fold(T::one(), |a, b| a.max(b));
        let tol = T::lit(1e-12) * scale * scale;
        for i in 0..DIM {
            let dd = frame.exterior_d(&frame.differentials[i])?;
            if dd.max_abs() > tol {
                return Err(ExteriorError::InvalidFrame(format!(
                    "d(d e^{}) = {} does not vanish (Jacobi identity fails)",
                    i + 1,
                    dd
                )));
            }
        }
        if frame.exterior_d(&frame.omega)?.max_abs() > tol {
            return Err(ExteriorError::InvalidFrame("omega is not closed".into()));
        }
        Ok(frame)
    }

    /// Frame with all-zero differential table.
    pub fn flat(omega: Form<T>) -> Result<Self, ExteriorError> {
        Self::new(std::array::from_fn(|_| Form::zero(2)), omega)
    }

    pub fn differential(&self, i: usize) -> &Form<T> {
        &self.differentials[i]
    }

    pub fn differentials(&self) -> &[Form<T>; DIM] {
        &self.differentials
    }

    pub fn omega(&self) -> &Form<T> {
        &self.omega
    }

    /// `Ω_ij = ω(e_i, e_j)`.
    pub fn omega_matrix(&self) -> &Matrix6<T> {
        &self.omega_matrix
    }

    /// `π^{pq}` entering `Λ_ω = ½ π^{pq} ι_q ι_p`, normalized so `Λ_ω ω = 3`.
    pub fn poisson(&self) -> &Matrix6<T> {
        &self.poisson
    }

    /// `ω³/3! = volume · e^{123456}`.
    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn coordinate_axes(&self) -> [usize; 3] {
        self.coordinate_axes
    }

    /// `d` of the constant basis form `e^{blade}`.
    pub fn blade_differential(&self, blade: Blade) -> &Form<T> {
        &self.blade_d[blade.bits() as usize]
    }

    /// `d(c e^I) = Σ_j ∂_j c dx^j ∧ e^I + c d(e^I)`.
    pub fn exterior_d<C: Coefficient<Scalar = T>>(&self, a: &Form<C>) -> Result<Form<C>, ExteriorError> {
        if a.degree() >= DIM {
            return Err(ExteriorError::DegreeOverflow(a.degree(), 1));
        }
        let mut out = Form::zero(a.degree() + 1);
        for (b, c) in a.terms() {
            for (j, &axis) in self.coordinate_axes.iter().enumerate() {
                if let Some(dc) = c.partial(j) {
                    if let Some((nb, sign)) = Blade::single(axis).wedge_sign(b) {
                        out.accumulate_signed(nb, &dc, sign);
                    }
                }
            }
            for (nb, s) in self.blade_differential(b).terms() {
                out.accumulate(nb, c.scale(*s));
            }
        }
        Ok(out)
    }

    /// Lefschetz contraction `Λ_ω a = ½ π^{pq} ι_q ι_p a`.
    pub fn lambda<C: Coefficient<Scalar = T>>(&self, a: &Form<C>) -> Result<Form<C>, ExteriorError> {
        if a.degree() < 2 {
            return Err(ExteriorError::DegreeUnderflow { found: a.degree(), min: 2 });
        }
        let half = T::lit(0.5);
        let mut out = Form::zero(a.degree() - 2);
        for p in 0..DIM {
            let ip = a.interior(p);
            if ip.is_empty() {
                continue;
            }
            for q in 0..DIM {
                let w = self.poisson[(p, q)];
                if w == T::zero() {
                    continue;
                }
                for (b, c) in ip.interior(q).terms() {
                    out.accumulate(b, c.scale(half * w));
                }
            }
        }
        Ok(out)
    }

    /// `L a = ω ∧ a`.
    pub fn lefschetz<C: Coefficient<Scalar = T>>(&self, a: &Form<C>) -> Result<Form<C>, ExteriorError> {
        if a.degree() + 2 > DIM {
            return Err(ExteriorError::DegreeOverflow(2, a.degree()));
        }
        let mut out = Form::zero(a.degree() + 2);
        for (bw, w) in self.omega.terms() {
            for (b, c) in a.terms() {
                if let Some((nb, sign)) = bw.wedge_sign(b) {
                    out.accumulate_signed(nb, &c.scale(*w), sign);
                }
            }
        }
        Ok(out)
    }

    /// Hodge star of a constant form for the Gram matrix `g`, oriented by
    /// `ω³/3!`: `β ∧ *α = ⟨β, α⟩_g vol_g`.
    pub fn hodge_star(&self, a: &Form<T>, g: &Matrix6<T>) -> Result<Form<T>, ExteriorError> {
        let g_inv = checked_inverse_metric(g)?;
        let orientation = if self.volume > T::zero() { T::one() } else { -T::one() };
        let vol_g = g.determinant().sqrt() * orientation;
        let k = a.degree();
        let mut out = Form::zero(DIM - k);
        for b in Blade::all_of_degree(k) {
            let rows: Vec<usize> = b.indices().collect();
            let mut gram = T::zero();
            for (ba, ca) in a.terms() {
                let cols: Vec<usize> = ba.indices().collect();
                gram += *ca * minor_det(&g_inv, &rows, &cols);
            }
            if gram == T::zero() {
                continue;
            }
            let comp = b.complement();
            let (_, sign) = b.wedge_sign(comp).expect("disjoint");
            out.accumulate_signed(comp, &(gram * vol_g), sign);
        }
        Ok(out)
    }
}

/// Leibniz expansion of `d(e^{i_1} ∧ … ∧ e^{i_k})` from the table.
fn blade_differential<T: Real>(table: &[Form<T>; DIM], blade: Blade) -> Form<T> {
    let idx: Vec<usize> = blade.indices().collect();
    let mut out = Form::zero((blade.degree() + 1).min(DIM));
    if blade.degree() == DIM {
        return out;
    }
    let mut left = Blade::EMPTY;
    for (pos, &i) in idx.iter().enumerate() {
        let right = Blade::from_indices(&idx[pos + 1..]).unwrap();
        let sign_pos: i8 = if pos % 2 == 0 { 1 } else { -1 };
        for (b2, c) in table[i].terms() {
            let Some((lb, s1)) = left.wedge_sign(b2) else { continue };
            let Some((full, s2)) = lb.wedge_sign(right) else { continue };
            out.accumulate_signed(full, c, sign_pos * s1 * s2);
        }
        left = Blade::from_indices(&idx[..=pos]).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(labels: &[usize]) -> Form<f64> {
        Form::term(1.0, labels)
    }

    fn flat() -> Frame<f64> {
        Frame::flat(standard_omega()).unwrap()
    }

    #[test]
    fn lambda_of_omega_is_three() {
        let f = flat();
        let l = f.lambda(f.omega()).unwrap();
        assert_eq!(l.degree(), 0);
        assert!((l.get(Blade::EMPTY) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_reduces_to_pairwise_contractions() {
        let f = flat();
        let a = e(&[1, 2, 3, 4]).add(&e(&[1, 3, 5, 6]).scale(2.0)).unwrap();
        let mut direct = Form::zero(2);
        for k in 0..3 {
            direct = direct.add(&a.interior(2 * k).interior(2 * k + 1)).unwrap();
        }
        assert!(f.lambda(&a).unwrap().approx_eq(&direct, 1e-15));
    }

    #[test]
    fn degenerate_omega_rejected() {
        let omega = e(&[1, 2]).add(&e(&[3, 4])).unwrap();
        assert_eq!(Frame::flat(omega).unwrap_err(), ExteriorError::DegenerateOmega);
    }

    #[test]
    fn jacobi_violation_rejected() {
        // de^1 = e^{23}, de^3 = e^{45}: d(de^1) = -e^{245}
        let mut table: [Form<f64>; 6] = std::array::from_fn(|_| Form::zero(2));
        table[0] = e(&[2, 3]);
        table[2] = e(&[4, 5]);
        let err = Frame::new(table, standard_omega()).unwrap_err();
        assert!(matches!(err, ExteriorError::InvalidFrame(_)));
    }

    #[test]
    fn leibniz_on_table() {
        // de^4 = e^{15}: d(e^{34}) = -e^3 ∧ e^{15} = -e^{315} = e^{135}
        let mut table: [Form<f64>; 6] = std::array::from_fn(|_| Form::zero(2));
        table[3] = e(&[1, 5]);
        table[5] = e(&[1, 3]);
        let f = Frame::new(table, standard_omega()).unwrap();
        assert_eq!(f.exterior_d(&e(&[3, 4])).unwrap(), e(&[1, 3, 5]));
        assert!(f.exterior_d(&e(&[1, 3])).unwrap().is_empty());
        assert!(f.exterior_d(&e(&[1, 2, 3, 4, 5, 6])).is_err());
    }

    #[test]
    fn hodge_of_adapted_phi() {
        let f = flat();
        let phi = e(&[1, 3, 5])
            .sub(&e(&[1, 4, 6]))
            .and_then(|x| x.sub(&e(&[2, 4, 5])))
            .and_then(|x| x.sub(&e(&[2, 3, 6])))
            .unwrap()
            .scale(0.5);
        let star = f.hodge_star(&phi, &Matrix6::identity()).unwrap();
        let expected: Form<f64> = "0.5 e^{136} + 0.5 e^{145} + 0.5 e^{235} - 0.5 e^{246}".parse().unwrap();
        assert!(star.approx_eq(&expected, 1e-15));
        let twice = f.hodge_star(&star, &Matrix6::identity()).unwrap();
        assert!(twice.approx_eq(&phi.neg(), 1e-15));
    }
}

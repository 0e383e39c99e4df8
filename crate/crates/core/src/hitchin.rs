//! Stable 3-forms in six dimensions: the endomorphism `K_φ`, the invariant
//! `λ(φ)`, the almost complex structure `J_φ`, the dual form `φ̂ = J_φ φ`,
//! `|φ|²`, and the compatible metrics `g_φ` and `g̃ = |φ|² g_φ`.
//!
//! Orientation is taken from `e^{123456}`. With that orientation the raw
//! contraction `ι_{e_a}φ ∧ φ = k^b_a ι_{e_b} e^{123456}` yields `-J` on the
//! model form, so [`k_endomorphism`] returns `K = -k`; `λ` and `K²` do not
//! see the sign.

use nalgebra::Matrix6;

use crate::error::{ExteriorError, HitchinError};
use crate::exterior::{standard_omega, symplectic_volume, two_form_matrix, Blade, Form, Frame, DIM};
use crate::scalar::Real;

fn require_three_form<T: Real>(phi: &Form<T>) -> Result<(), ExteriorError> {
    if phi.degree() != 3 {
        return Err(ExteriorError::DegreeMismatch(phi.degree(), 3));
    }
    Ok(())
}

/// `K^b_a` with column `a` holding `K e_a`.
pub fn k_endomorphism<T: Real>(phi: &Form<T>) -> Result<Matrix6<T>, ExteriorError> {
    require_three_form(phi)?;
    let mut k = Matrix6::zeros();
    for a in 0..DIM {
        let five = phi.interior(a).wedge(phi)?;
        for b in 0..DIM {
            // ι_{e_b} e^{123456} = (-1)^b e^{…b̂…}
            let c = five.get(Blade::TOP.complement_of(b));
            let sign = if b % 2 == 0 { T::one() } else { -T::one() };
            k[(b, a)] = -c * sign;
        }
    }
    Ok(k)
}

/// `λ(φ) = tr(K²)/6`; `φ` is positive iff `λ < 0`.
pub fn lambda_invariant<T: Real>(phi: &Form<T>) -> Result<T, ExteriorError> {
    let k = k_endomorphism(phi)?;
    Ok((k * k).trace() / T::lit(6.0))
}

fn positive_k<T: Real>(phi: &Form<T>) -> Result<(Matrix6<T>, T), HitchinError> {
    let k = k_endomorphism(phi)?;
    let lambda = (k * k).trace() / T::lit(6.0);
    // scale-aware threshold: λ is quartic in φ
    let s = phi.max_abs();
    if !(lambda < -T::tol() * s * s * s * s) {
        return Err(HitchinError::NotPositive(lambda.as_f64()));
    }
    Ok((k, lambda))
}

/// `J_φ = K/√(-λ)`.
pub fn almost_complex<T: Real>(phi: &Form<T>) -> Result<Matrix6<T>, HitchinError> {
    let (k, lambda) = positive_k(phi)?;
    Ok(k / (-lambda).sqrt())
}

/// `φ̂(X, Y, Z) = φ(J X, J Y, J Z)`.
pub fn dual_three_form<T: Real>(phi: &Form<T>) -> Result<Form<T>, HitchinError> {
    let j = almost_complex(phi)?;
    Ok(phi.pullback(&j))
}

/// `|φ|²` defined by `φ ∧ φ̂ = |φ|² ω³/3!`.
pub fn norm_squared<T: Real>(phi: &Form<T>, omega: &Form<T>) -> Result<T, HitchinError> {
    let hat = dual_three_form(phi)?;
    norm_squared_with_dual(phi, &hat, omega)
}

fn norm_squared_with_dual<T: Real>(phi: &Form<T>, hat: &Form<T>, omega: &Form<T>) -> Result<T, HitchinError> {
    let vol = symplectic_volume(omega);
    if vol == T::zero() {
        return Err(ExteriorError::DegenerateOmega.into());
    }
    Ok(phi.wedge(hat)?.get(Blade::TOP) / vol)
}

/// Antisymmetric component tensor `φ_{ijk}` with `φ = Σ_{i<j<k} φ_{ijk} e^{ijk}`.
pub fn three_form_components<T: Real>(phi: &Form<T>) -> [[[T; DIM]; DIM]; DIM] {
    let mut t = [[[T::zero(); DIM]; DIM]; DIM];
    for (b, c) in phi.terms() {
        let ix: Vec<usize> = b.indices().collect();
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        let c = *c;
        t[i][j][k] = c;
        t[j][k][i] = c;
        t[k][i][j] = c;
        t[j][i][k] = -c;
        t[i][k][j] = -c;
        t[k][j][i] = -c;
    }
    t
}

/// `g̃_{ij} = -φ_{jkp} φ_{iab} ω^{ka} ω^{pb}`.
pub fn g_tilde_from_components<T: Real>(phi: &Form<T>, omega: &Form<T>) -> Result<Matrix6<T>, ExteriorError> {
    let w = two_form_matrix(omega).try_inverse().ok_or(ExteriorError::DegenerateOmega)?;
    let t = three_form_components(phi);
    let mut gt = Matrix6::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut acc = T::zero();
            for k in 0..DIM {
                for p in 0..DIM {
                    let tj = t[j][k][p];
                    if tj == T::zero() {
                        continue;
                    }
                    for a in 0..DIM {
                        let wka = w[(k, a)];
                        if wka == T::zero() {
                            continue;
                        }
                        for b in 0..DIM {
                            acc += tj * t[i][a][b] * wka * w[(p, b)];
                        }
                    }
                }
            }
            gt[(i, j)] = -acc;
        }
    }
    Ok(gt)
}

fn primitivity_residual<T: Real>(phi: &Form<T>, omega: &Form<T>) -> Result<T, ExteriorError> {
    Ok(omega.wedge(phi)?.max_abs())
}

/// `g_φ(X, Y) = ω(X, J_φ Y)` and `g̃ = -φ φ ω⁻¹ ω⁻¹`, computed independently.
pub fn metric_from<T: Real>(phi: &Form<T>, omega: &Form<T>) -> Result<(Matrix6<T>, Matrix6<T>), HitchinError> {
    let j = almost_complex(phi)?;
    let scale = phi.max_abs().max(T::one());
    let prim = primitivity_residual(phi, omega)?;
    if prim > T::lit(1e-10) * scale {
        return Err(HitchinError::NotPrimitive(prim.as_f64()));
    }
    let g = two_form_matrix(omega) * j;
    if (g - g.transpose()).amax() > T::lit(1e-10) || nalgebra::Cholesky::new(g).is_none() {
        return Err(HitchinError::NotPrimitive(prim.as_f64()));
    }
    let gt = g_tilde_from_components(phi, omega)?;
    Ok((g, gt))
}

/// A symplectic form with a compatible positive primitive 3-form, with the
/// induced `J`, `φ̂`, `|φ|²`, `g` and `g̃` cached.
#[derive(Clone, Debug)]
pub struct TypeIIAStructure<T: Real> {
    omega: Form<T>,
    phi: Form<T>,
    j: Matrix6<T>,
    phi_hat: Form<T>,
    norm_sq: T,
    g: Matrix6<T>,
    g_tilde: Matrix6<T>,
}

impl<T: Real> TypeIIAStructure<T> {
    /// Pointwise structure: checks positivity and primitivity only.
    pub fn pointwise(omega: Form<T>, phi: Form<T>) -> Result<Self, HitchinError> {
        require_three_form(&phi)?;
        let (g, g_tilde) = metric_from(&phi, &omega)?;
        let j = almost_complex(&phi)?;
        let phi_hat = phi.pullback(&j);
        let norm_sq = norm_squared_with_dual(&phi, &phi_hat, &omega)?;
        if !(norm_sq > T::zero()) {
            return Err(HitchinError::NotPositive(norm_sq.as_f64()));
        }
        Ok(TypeIIAStructure { omega, phi, j, phi_hat, norm_sq, g, g_tilde })
    }

    /// Structure on a frame: additionally requires `dφ = 0`.
    pub fn on_frame(frame: &Frame<T>, phi: Form<T>) -> Result<Self, HitchinError> {
        let closed = frame.exterior_d(&phi)?.max_abs();
        if closed > T::lit(1e-10) * phi.max_abs().max(T::one()) {
            return Err(HitchinError::NotClosed(closed.as_f64()));
        }
        Self::pointwise(frame.omega().clone(), phi)
    }

    /// `ω = e^{12}+e^{34}+e^{56}`, `φ = ½(e^{135} - e^{146} - e^{245} - e^{236})`.
    pub fn adapted() -> Self {
        Self::pointwise(standard_omega(), adapted_phi()).expect("model form is positive and primitive")
    }

    pub fn omega(&self) -> &Form<T> {
        &self.omega
    }

    pub fn phi(&self) -> &Form<T> {
        &self.phi
    }

    pub fn j(&self) -> &Matrix6<T> {
        &self.j
    }

    pub fn phi_hat(&self) -> &Form<T> {
        &self.phi_hat
    }

    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    pub fn g(&self) -> &Matrix6<T> {
        &self.g
    }

    pub fn g_tilde(&self) -> &Matrix6<T> {
        &self.g_tilde
    }

    /// The pair `(φ̂, -φ)` obtained by rotating the phase of `φ + iφ̂` by π/2.
    pub fn phase_rotated(&self) -> Result<Self, HitchinError> {
        Self::pointwise(self.omega.clone(), self.phi_hat.clone())
    }
}

/// `½(e^{135} - e^{146} - e^{245} - e^{236})`.
pub fn adapted_phi<T: Real>() -> Form<T> {
    let h = T::lit(0.5);
    Form::from_terms(
        3,
        [([1, 3, 5], h), ([1, 4, 6], -h), ([2, 4, 5], -h), ([2, 3, 6], -h)]
            .into_iter()
            .map(|(l, c)| (Blade::from_labels(&l).unwrap(), c)),
    )
}

/// `½(e^{136} + e^{145} + e^{235} - e^{246})`.
pub fn adapted_phi_hat<T: Real>() -> Form<T> {
    let h = T::lit(0.5);
    Form::from_terms(
        3,
        [([1, 3, 6], h), ([1, 4, 5], h), ([2, 3, 5], h), ([2, 4, 6], -h)]
            .into_iter()
            .map(|(l, c)| (Blade::from_labels(&l).unwrap(), c)),
    )
}

/// `J e_{2k-1} = e_{2k}`, `J e_{2k} = -e_{2k-1}`.
pub fn standard_j<T: Real>() -> Matrix6<T> {
    let mut j = Matrix6::zeros();
    for k in 0..3 {
        j[(2 * k + 1, 2 * k)] = T::one();
        j[(2 * k, 2 * k + 1)] = -T::one();
    }
    j
}

impl Blade {
    /// The 5-blade omitting index `b`.
    fn complement_of(self, b: usize) -> Blade {
        Blade::from_bits(self.bits() & !(1u8 << b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(labels: &[usize]) -> Form<f64> {
        Form::term(1.0, labels)
    }

    /// Brute-force `K`: evaluate `ι_{e_a}φ ∧ φ ∧ e^b` against the volume
    /// form directly, without the contraction identity.
    fn k_by_brute_force(phi: &Form<f64>) -> Matrix6<f64> {
        let mut k = Matrix6::zeros();
        for a in 0..6 {
            let five = phi.interior(a).wedge(phi).unwrap();
            for b in 0..6 {
                // e^b ∧ ι_{e_b} vol = vol, so the coefficient k^b_a satisfies
                // e^b ∧ five = k^b_a vol
                let top = Form::term(1.0, &[b + 1]).wedge(&five).unwrap();
                k[(b, a)] = -top.get(Blade::TOP);
            }
        }
        k
    }

    #[test]
    fn zero_form_gives_zero_k() {
        assert_eq!(k_endomorphism(&Form::<f64>::zero(3)).unwrap(), Matrix6::zeros());
    }

    #[test]
    fn adapted_k_squares_to_minus_quarter() {
        let phi = adapted_phi::<f64>();
        let k = k_endomorphism(&phi).unwrap();
        assert!((k - k_by_brute_force(&phi)).amax() < 1e-15);
        assert!((k * k + Matrix6::identity() * 0.25).amax() < 1e-15);
        let l = lambda_invariant(&phi).unwrap();
        assert!((l + 0.25).abs() < 1e-15);
        assert!((k / (-l).sqrt() - standard_j()).amax() < 1e-15);
    }

    #[test]
    fn decomposable_form_not_positive() {
        let phi = e(&[1, 2, 3]);
        let k = k_endomorphism(&phi).unwrap();
        let k2 = k * k;
        // K² = c·I with c >= 0
        assert!((k2 - Matrix6::identity() * k2[(0, 0)]).amax() < 1e-15);
        assert!(k2[(0, 0)] >= 0.0);
        assert!(lambda_invariant(&phi).unwrap() >= 0.0);
        assert!(matches!(almost_complex(&phi), Err(HitchinError::NotPositive(_))));
        assert!(matches!(dual_three_form(&phi), Err(HitchinError::NotPositive(_))));
        assert!(matches!(norm_squared(&phi, &standard_omega()), Err(HitchinError::NotPositive(_))));
    }

    #[test]
    fn adapted_dual_and_norm() {
        let phi = adapted_phi::<f64>();
        assert!(dual_three_form(&phi).unwrap().approx_eq(&adapted_phi_hat(), 1e-15));
        assert!((norm_squared(&phi, &standard_omega()).unwrap() - 1.0).abs() < 1e-15);
        // ⟨φ, φ⟩ = |φ|² = 1 with the identity Gram matrix
        assert!((phi.inner_product(&phi, &Matrix6::identity()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adapted_metric_is_identity() {
        let s = TypeIIAStructure::<f64>::adapted();
        assert!((s.g() - Matrix6::identity()).amax() < 1e-14);
        assert!((s.g_tilde() - Matrix6::identity()).amax() < 1e-14);
        assert!((s.j() * s.j() + Matrix6::identity()).amax() < 1e-14);
    }

    #[test]
    fn j_action_on_coframe() {
        let j = standard_j::<f64>();
        assert_eq!(e(&[1]).pullback(&j), e(&[2]).neg());
        assert_eq!(e(&[2]).pullback(&j), e(&[1]));
        assert!(adapted_phi::<f64>().pullback(&j).approx_eq(&adapted_phi_hat(), 1e-15));
    }

    #[test]
    fn scaling_power_laws() {
        // J and g are scale-invariant; |φ|² and g̃ scale as c².
        let phi = adapted_phi::<f64>();
        let omega = standard_omega::<f64>();
        for c in [0.5, 1.0, 2.0, 4.0] {
            let s = TypeIIAStructure::pointwise(omega.clone(), phi.scale(c)).unwrap();
            assert!((s.j() - standard_j()).amax() < 1e-13);
            assert!((s.g() - Matrix6::identity()).amax() < 1e-13);
            assert!((s.norm_sq() - c * c).abs() < 1e-12);
            assert!((s.g_tilde() - Matrix6::identity() * (c * c)).amax() < 1e-12);
        }
    }

    #[test]
    fn non_primitive_is_distinct_error() {
        // e^{125} is not primitive; add it to a positive form with small weight
        let phi = adapted_phi::<f64>().add(&e(&[1, 2, 5]).scale(0.1)).unwrap();
        assert!(lambda_invariant(&phi).unwrap() < 0.0);
        let err = TypeIIAStructure::pointwise(standard_omega(), phi).unwrap_err();
        assert!(matches!(err, HitchinError::NotPrimitive(_)));
    }

    #[test]
    fn double_dual_is_minus_phi() {
        let phi = adapted_phi::<f64>();
        let hh = dual_three_form(&dual_three_form(&phi).unwrap()).unwrap();
        assert!(hh.approx_eq(&phi.neg(), 1e-14));
    }

    #[test]
    fn single_precision_adapted_frame() {
        let s = TypeIIAStructure::<f32>::adapted();
        assert!((s.norm_sq() - 1.0).abs() < 1e-5);
        assert!((s.g() - Matrix6::identity()).amax() < 1e-5);
    }
}

//! Principal symbol of the flow family at a point: the constrained
//! variation space `W = {δφ : ξ∧δφ = 0, Λ_ω δφ = 0}`, the linearized dual
//! map, and the symbol spectrum on `W`.

use nalgebra::{DMatrix, DVector, Matrix6};
use serde::Serialize;

use crate::error::{HitchinError, SymbolError};
use crate::exterior::{minor_det, Blade, Form, Frame, DIM};
use crate::flows::Weight;
use crate::hitchin::{dual_three_form, TypeIIAStructure};
use crate::scalar::Real;

/// Base structure at a point, a covector and a flow weight.
#[derive(Clone, Debug)]
pub struct SymbolProblem<T: Real> {
    pub structure: TypeIIAStructure<T>,
    pub xi: [T; DIM],
    pub weight: Weight,
}

impl<T: Real> SymbolProblem<T> {
    pub fn new(structure: TypeIIAStructure<T>, xi: [T; DIM], weight: Weight) -> Result<Self, SymbolError> {
        if xi.iter().all(|x| x.abs() <= T::tol()) {
            return Err(SymbolError::DegenerateXi);
        }
        Ok(SymbolProblem { structure, xi, weight })
    }

    /// The adapted structure with `ξ = e¹`.
    pub fn adapted(weight: Weight) -> Self {
        let mut xi = [T::zero(); DIM];
        xi[0] = T::one();
        SymbolProblem { structure: TypeIIAStructure::adapted(), xi, weight }
    }

    pub fn xi_form(&self) -> Form<T> {
        Form::from_terms(
            1,
            self.xi.iter().enumerate().filter(|(_, c)| **c != T::zero()).map(|(i, c)| (Blade::single(i), *c)),
        )
    }
}

/// `e¹∧κ`, `e¹∧μ₁±`, `e¹∧μ₂±` with `κ = e^{34}−e^{56}`, `μ₁± = e^{45}±e^{36}`,
/// `μ₂± = e^{35}±e^{46}`.
pub fn model_basis<T: Real>() -> Vec<(&'static str, Form<T>)> {
    let one = T::one();
    let two = |a: [usize; 3], b: [usize; 3], s: T| {
        Form::from_terms(3, [(Blade::from_labels(&a).unwrap(), one), (Blade::from_labels(&b).unwrap(), s)])
    };
    vec![
        ("kappa", two([1, 3, 4], [1, 5, 6], -one)),
        ("mu1+", two([1, 4, 5], [1, 3, 6], one)),
        ("mu1-", two([1, 4, 5], [1, 3, 6], -one)),
        ("mu2+", two([1, 3, 5], [1, 4, 6], one)),
        ("mu2-", two([1, 3, 5], [1, 4, 6], -one)),
    ]
}

/// Gram matrix of `⟨e^I, e^J⟩` on `Λ^k` in `Blade::all_of_degree` order.
pub fn gram_matrix<T: Real>(k: usize, g_inv: &Matrix6<T>) -> DMatrix<T> {
    let blades = Blade::all_of_degree(k);
    let idx: Vec<Vec<usize>> = blades.iter().map(|b| b.indices().collect()).collect();
    DMatrix::from_fn(blades.len(), blades.len(), |i, j| minor_det(g_inv, &idx[i], &idx[j]))
}

#[derive(Clone, Debug)]
pub struct ConstraintSpace<T: Real> {
    /// `g`-orthonormal basis of `W`.
    pub basis: Vec<Form<T>>,
}

fn omega_lambda<T: Real>(s: &TypeIIAStructure<T>) -> Result<Frame<T>, SymbolError> {
    Ok(Frame::flat(s.omega().clone())?)
}

/// Null space of `δφ ↦ (ξ∧δφ, Λ_ω δφ)`, orthonormalized in `g_φ`.
pub fn constraint_space<T: Real>(p: &SymbolProblem<T>) -> Result<ConstraintSpace<T>, SymbolError> {
    let frame = omega_lambda(&p.structure)?;
    let xi = p.xi_form();
    let blades = Blade::all_of_degree(3);
    let rows4 = Blade::all_of_degree(4).len();
    let rows1 = DIM;
    let mut a = DMatrix::<T>::zeros(rows4 + rows1, blades.len());
    for (j, b) in blades.iter().enumerate() {
        let e = Form::monomial(T::one(), *b);
        for (i, v) in xi.wedge(&e)?.to_dense().into_iter().enumerate() {
            a[(i, j)] = v;
        }
        for (i, v) in frame.lambda(&e)?.to_dense().into_iter().enumerate() {
            a[(rows4 + i, j)] = v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let null: Vec<DVector<T>> = (0..blades.len())
        .filter(|&i| svd.singular_values[i] <= T::lit(1e-10) * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if null.len() != 5 {
        return Err(SymbolError::ConstraintDimension(null.len()));
    }
    let g_inv = crate::exterior::checked_inverse_metric(p.structure.g())?;
    let gram = gram_matrix(3, &g_inv);
    let b = DMatrix::from_columns(&null);
    let gw = b.transpose() * &gram * &b;
    let chol = nalgebra::Cholesky::new(gw).ok_or(SymbolError::ConstraintDimension(0))?;
    let l_inv_t = chol.l().try_inverse().ok_or(SymbolError::ConstraintDimension(0))?.transpose();
    let ortho = b * l_inv_t;
    let basis = (0..5)
        .map(|j| Form::from_dense(3, ortho.column(j).as_slice()).pruned(T::lit(1e-15)))
        .collect();
    Ok(ConstraintSpace { basis })
}

/// `δφ̂ = −J_φ δφ − 2⟨δφ,φ̂⟩/|φ|² φ + 2⟨δφ,φ⟩/|φ|² φ̂` with `J` acting on all
/// three arguments and `⟨,⟩` induced by `g_φ`.
pub fn linearized_dual<T: Real>(s: &TypeIIAStructure<T>, dphi: &Form<T>) -> Result<Form<T>, HitchinError> {
    let n = s.norm_sq();
    let two = T::lit(2.0);
    let a = dphi.inner_product(s.phi_hat(), s.g())?;
    let b = dphi.inner_product(s.phi(), s.g())?;
    Ok(dphi
        .pullback(s.j())
        .neg()
        .sub(&s.phi().scale(two * a / n))?
        .add(&s.phi_hat().scale(two * b / n))?)
}

/// Central difference `(φ̂(φ+hδφ) − φ̂(φ−hδφ))/2h`.
pub fn dual_finite_difference<T: Real>(phi: &Form<T>, dphi: &Form<T>, h: T) -> Result<Form<T>, HitchinError> {
    let plus = dual_three_form(&phi.add(&dphi.scale(h))?)?;
    let minus = dual_three_form(&phi.sub(&dphi.scale(h))?)?;
    Ok(plus.sub(&minus)?.scale(T::one() / (T::lit(2.0) * h)))
}

/// Linearization of `w(|φ|²) φ̂`: `w δφ̂ + w'(|φ|²) · 2⟨δφ,φ⟩ · φ̂`.
pub fn linearized_weighted_dual<T: Real>(
    s: &TypeIIAStructure<T>,
    weight: Weight,
    dphi: &Form<T>,
) -> Result<Form<T>, HitchinError> {
    let n = s.norm_sq();
    let dn = T::lit(2.0) * dphi.inner_product(s.phi(), s.g())?;
    Ok(linearized_dual(s, dphi)?.scale(weight.value(n)).add(&s.phi_hat().scale(weight.derivative(n) * dn))?)
}

/// `ξ∧Λ_ω[ξ∧L(δφ)]`.
pub fn symbol_map<T: Real>(p: &SymbolProblem<T>, dphi: &Form<T>) -> Result<Form<T>, SymbolError> {
    let frame = omega_lambda(&p.structure)?;
    let xi = p.xi_form();
    let l = linearized_weighted_dual(&p.structure, p.weight, dphi)?;
    Ok(xi.wedge(&frame.lambda(&xi.wedge(&l)?)?)?)
}

#[derive(Clone, Debug)]
pub struct SymbolSpectrum<T: Real> {
    pub basis: Vec<Form<T>>,
    /// `⟨w_i, S(w_j)⟩` in the orthonormal basis of `W`.
    pub matrix: DMatrix<T>,
    /// Real parts, ascending.
    pub eigenvalues: Vec<T>,
    pub max_imaginary: T,
    /// Eigenvalues with `|λ| < 10⁻⁸`.
    pub kernel_dim: usize,
    /// `‖S − Sᵀ‖` in the orthonormal basis.
    pub asymmetry: T,
}

pub fn symbol_spectrum<T: Real>(p: &SymbolProblem<T>) -> Result<SymbolSpectrum<T>, SymbolError> {
    let w = constraint_space(p)?;
    let g = *p.structure.g();
    let images = w.basis.iter().map(|b| symbol_map(p, b)).collect::<Result<Vec<_>, _>>()?;
    let mut m = DMatrix::zeros(5, 5);
    for i in 0..5 {
        for j in 0..5 {
            m[(i, j)] = w.basis[i].inner_product(&images[j], &g)?;
        }
    }
    let asymmetry = (&m - m.transpose()).amax();
    let eig = m.complex_eigenvalues();
    let mut eigenvalues: Vec<T> = eig.iter().map(|c| c.re).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let max_imaginary = eig.iter().fold(T::zero(), |acc, c| acc.max(c.im.abs()));
    let kernel_dim = eigenvalues.iter().filter(|e| e.abs() < T::lit(1e-8)).count();
    Ok(SymbolSpectrum { basis: w.basis, matrix: m, eigenvalues, max_imaginary, kernel_dim, asymmetry })
}

/// Images `S(b)` of the model basis, as coefficients along the same basis,
/// and the part of each image outside its span.
pub fn model_basis_images<T: Real>(p: &SymbolProblem<T>) -> Result<(DMatrix<T>, T), SymbolError> {
    let basis = model_basis::<T>();
    let mut m = DMatrix::zeros(5, 5);
    let mut off = T::zero();
    for (j, (_, b)) in basis.iter().enumerate() {
        let img = symbol_map(p, b)?;
        let mut rest = img.clone();
        for (i, (_, bi)) in basis.iter().enumerate() {
            let c = img.coefficient_dot(bi) / bi.coefficient_dot(bi);
            m[(i, j)] = c;
            rest = rest.sub(&bi.scale(c))?;
        }
        off = off.max(rest.max_abs());
    }
    Ok((m, off))
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolReport {
    pub weight: String,
    pub xi: Vec<f64>,
    pub basis: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub kernel_dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_basis: Option<ModelBasisReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelBasisReport {
    pub names: Vec<&'static str>,
    /// Column `j` holds the image of basis element `j`.
    pub images: Vec<Vec<f64>>,
}

impl SymbolReport {
    pub fn build<T: Real>(p: &SymbolProblem<T>) -> Result<Self, SymbolError> {
        let spec = symbol_spectrum(p)?;
        let to_rows = |m: &DMatrix<T>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].as_f64()).collect()).collect()
        };
        let adapted = (p.structure.g() - Matrix6::identity()).amax() < T::lit(1e-10)
            && p.structure.phi().approx_eq(&crate::hitchin::adapted_phi(), T::lit(1e-10))
            && p.xi[0] == T::one()
            && p.xi[1..].iter().all(|x| *x == T::zero());
        let model_basis = if adapted {
            let (m, _) = model_basis_images(p)?;
            Some(ModelBasisReport { names: model_basis::<T>().iter().map(|(n, _)| *n).collect(), images: to_rows(&m) })
        } else {
            None
        };
        Ok(SymbolReport {
            weight: p.weight.to_string(),
            xi: p.xi.iter().map(|x| x.as_f64()).collect(),
            basis: spec.basis.iter().map(|b| b.to_string()).collect(),
            matrix: to_rows(&spec.matrix),
            eigenvalues: spec.eigenvalues.iter().map(|x| x.as_f64()).collect(),
            kernel_dimension: spec.kernel_dim,
            model_basis,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::standard_omega;
    use crate::hitchin::adapted_phi;

    fn assert_spectrum(ev: &[f64], expected: &[f64], tol: f64) {
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < tol, "{ev:?} vs {expected:?}");
        }
    }

    #[test]
    fn constraint_space_dimension_and_model_basis() {
        let p = SymbolProblem::<f64>::adapted(Weight::HitchinGradient);
        let w = constraint_space(&p).unwrap();
        assert_eq!(w.basis.len(), 5);
        let f = Frame::flat(standard_omega()).unwrap();
        let xi = p.xi_form();
        for (_, b) in model_basis::<f64>() {
            assert!(xi.wedge(&b).unwrap().is_empty());
            assert!(f.lambda(&b).unwrap().max_abs() < 1e-15);
            // b lies in span(W)
            let mut rest = b.clone();
            for w in &w.basis {
                rest = rest.sub(&w.scale(w.inner_product(&b, &Matrix6::identity()).unwrap())).unwrap();
            }
            assert!(rest.max_abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_xi() {
        let s = TypeIIAStructure::<f64>::adapted();
        assert!(matches!(SymbolProblem::new(s, [0.0; 6], Weight::HitchinGradient), Err(SymbolError::DegenerateXi)));
    }

    #[test]
    fn hitchin_lemma() {
        let p = SymbolProblem::<f64>::adapted(Weight::HitchinGradient);
        let s = symbol_spectrum(&p).unwrap();
        assert_spectrum(&s.eigenvalues, &[0.0, 0.0, 1.0, 1.0, 1.0], 1e-12);
        assert_eq!(s.kernel_dim, 2);
        assert!(s.asymmetry < 1e-12);
        let (m, off) = model_basis_images(&p).unwrap();
        assert!(off < 1e-12);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0]));
        assert!((m - expected).amax() < 1e-12);
    }

    #[test]
    fn type_iia_single_zero() {
        let p = SymbolProblem::<f64>::adapted(Weight::TypeIIA);
        let s = symbol_spectrum(&p).unwrap();
        assert_eq!(s.kernel_dim, 1);
        assert_spectrum(&s.eigenvalues, &[0.0, 0.0625, 0.0625, 0.0625, 0.0625], 1e-12);
    }

    #[test]
    fn xi_e3_and_scaling() {
        let mut p = SymbolProblem::<f64>::adapted(Weight::HitchinGradient);
        p.xi = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_spectrum(&symbol_spectrum(&p).unwrap().eigenvalues, &[0.0, 0.0, 1.0, 1.0, 1.0], 1e-12);
        p.xi = [3.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let ev: Vec<f64> = symbol_spectrum(&p).unwrap().eigenvalues.iter().map(|e| e / 9.0).collect();
        assert_spectrum(&ev, &[0.0, 0.0, 1.0, 1.0, 1.0], 1e-12);
    }

    #[test]
    fn linearized_dual_special_directions() {
        let s = TypeIIAStructure::<f64>::adapted();
        // φ̂ is homogeneous of degree one
        assert!(linearized_dual(&s, s.phi()).unwrap().approx_eq(s.phi_hat(), 1e-14));
        // e¹∧κ is orthogonal to φ and φ̂
        let k = &model_basis::<f64>()[0].1;
        let lhs = linearized_dual(&s, k).unwrap();
        assert!(lhs.approx_eq(&k.pullback(s.j()).neg(), 1e-14));
    }

    #[test]
    fn linearized_dual_matches_finite_differences() {
        let phi = adapted_phi::<f64>();
        let s = TypeIIAStructure::pointwise(standard_omega(), phi.clone()).unwrap();
        let d: Form<f64> = "0.3 e^{123} - 0.7 e^{246} + 0.2 e^{345} + 0.5 e^{156} + 0.1 e^{236}".parse().unwrap();
        let exact = linearized_dual(&s, &d).unwrap();
        for h in [1e-4, 1e-5] {
            let fd = dual_finite_difference(&phi, &d, h).unwrap();
            assert!(fd.distance(&exact) <= 1e-6 * exact.max_abs(), "h = {h}");
        }
    }

    #[test]
    fn report_serializes() {
        let r = SymbolReport::build(&SymbolProblem::<f64>::adapted(Weight::HitchinGradient)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["kernel_dimension"], 2);
        assert_eq!(v["model_basis"]["names"][0], "kappa");
    }
}

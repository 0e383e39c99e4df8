//! Semi-flat symplectic structures on `T³ × R³` built from a Hessian
//! metric, and the residuals of the dual 3-form flows.

use nalgebra::Matrix6;
use serde::Serialize;

use super::grid::GridField;
use super::metric::{HessianMetricField, SemiflatFlow};
use crate::error::{HitchinError, SemiflatError};
use crate::exterior::{standard_omega, Blade, Coefficient, Form, Frame};
use crate::flows::flow_velocity;
use crate::hitchin::TypeIIAStructure;
use crate::scalar::Real;

/// Coframe `e¹..e⁶ = dx¹, dy₁, dx², dy₂, dx³, dy₃` with `ω = Σ dx^j ∧ dy_j`
/// and coefficients depending on `x¹, x², x³` only.
pub fn semiflat_frame<T: Real>() -> Frame<T> {
    Frame::with_axes(std::array::from_fn(|_| Form::zero(2)), standard_omega(), [0, 2, 4])
        .expect("flat frame is valid")
}

/// `φ`, `φ̂` and `|φ|² = 4 det g` for a Hessian metric field.
#[derive(Clone, Debug)]
pub struct SemiflatForms<T: Real> {
    pub phi: Form<GridField<T>>,
    pub phi_hat: Form<GridField<T>>,
    pub det: GridField<T>,
    pub norm_sq: GridField<T>,
}

impl<T: Real> SemiflatForms<T> {
    /// Forms at a single grid point.
    pub fn at(&self, idx: usize) -> (Form<T>, Form<T>) {
        (self.phi.map_coefficients(|c| c.at(idx)), self.phi_hat.map_coefficients(|c| c.at(idx)))
    }
}

fn one_form<T: Real>(terms: Vec<(usize, GridField<T>)>) -> Form<GridField<T>> {
    Form::from_terms(1, terms.into_iter().map(|(i, c)| (Blade::single(i), c)))
}

/// `dx_j = Σ_k g_jk dx^k`, and
/// `φ = dx₁dx₂dx₃ − dx₁dy₂dy₃ − dy₁dx₂dy₃ − dy₁dy₂dx₃`,
/// `φ̂ = dx₁dx₂dy₃ + dx₁dy₂dx₃ + dy₁dx₂dx₃ − dy₁dy₂dy₃`.
pub fn reconstruct_forms<T: Real>(g: &HessianMetricField<T>) -> SemiflatForms<T> {
    let grid = g.grid();
    let one = GridField::uniform(grid, T::one());
    let lower: Vec<Form<GridField<T>>> =
        (0..3).map(|j| one_form((0..3).map(|k| (2 * k, g.component(j, k).clone())).collect())).collect();
    let dy: Vec<Form<GridField<T>>> = (0..3).map(|j| one_form(vec![(2 * j + 1, one.clone())])).collect();
    let w3 = |a: &Form<GridField<T>>, b: &Form<GridField<T>>, c: &Form<GridField<T>>| {
        a.wedge(b).and_then(|ab| ab.wedge(c)).expect("1+1+1 <= 6")
    };
    let (x1, x2, x3) = (&lower[0], &lower[1], &lower[2]);
    let (y1, y2, y3) = (&dy[0], &dy[1], &dy[2]);
    let phi = w3(x1, x2, x3)
        .sub(&w3(x1, y2, y3))
        .and_then(|f| f.sub(&w3(y1, x2, y3)))
        .and_then(|f| f.sub(&w3(y1, y2, x3)))
        .expect("degree 3");
    let phi_hat = w3(x1, x2, y3)
        .add(&w3(x1, y2, x3))
        .and_then(|f| f.add(&w3(y1, x2, x3)))
        .and_then(|f| f.sub(&w3(y1, y2, y3)))
        .expect("degree 3");
    let det = g.det();
    let norm_sq = det.scale(T::lit(4.0));
    SemiflatForms { phi, phi_hat, det, norm_sq }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseReport {
    /// `max |φ̂ − J*φ|` against the stable-form construction.
    pub phi_hat_error: f64,
    /// `max | |φ|² − 4 det g |`.
    pub norm_error: f64,
    /// `max |J*dx_j + dy_j|`.
    pub complex_structure_error: f64,
    /// `max |ω ∧ φ|` (`φ` primitive).
    pub primitivity: f64,
    pub points: usize,
}

/// Compares the reconstruction with the pointwise Hitchin construction at
/// the given grid points.
pub fn pointwise_check<T: Real>(
    g: &HessianMetricField<T>,
    forms: &SemiflatForms<T>,
    points: &[usize],
) -> Result<PointwiseReport, HitchinError> {
    let omega = standard_omega::<T>();
    let mut rep =
        PointwiseReport { phi_hat_error: 0.0, norm_error: 0.0, complex_structure_error: 0.0, primitivity: 0.0, points: 0 };
    for &idx in points {
        let (phi, hat) = forms.at(idx);
        let s = TypeIIAStructure::pointwise(omega.clone(), phi.clone())?;
        rep.phi_hat_error = rep.phi_hat_error.max(s.phi_hat().distance(&hat).as_f64());
        rep.norm_error = rep.norm_error.max((s.norm_sq() - forms.norm_sq.at(idx)).abs().as_f64());
        rep.primitivity = rep.primitivity.max(omega.wedge(&phi)?.max_abs().as_f64());
        let m = g.matrix_at(idx);
        let jt: Matrix6<T> = s.j().transpose();
        for j in 0..3 {
            let mut row = nalgebra::Vector6::<T>::zeros();
            for k in 0..3 {
                row[2 * k] = m[j][k];
            }
            let pulled = jt * row;
            let mut err = T::zero();
            for i in 0..6 {
                let target = if i == 2 * j + 1 { -T::one() } else { T::zero() };
                err = err.max((pulled[i] - target).abs());
            }
            rep.complex_structure_error = rep.complex_structure_error.max(err.as_f64());
        }
        rep.points += 1;
    }
    Ok(rep)
}

/// `max` and `L²` norms of a field-valued form.
pub fn form_norms<T: Real>(f: &Form<GridField<T>>) -> (T, T) {
    let mut max = T::zero();
    let mut l2 = T::zero();
    for (_, c) in f.terms() {
        max = max.max(c.max_abs());
        l2 += c.l2_sq();
    }
    (max, l2.sqrt())
}

/// `c · dΛd(w(|φ|²) ψ̂)` with `ψ̂ = φ̂`, or `ψ̂ = −φ` for the phase-rotated pair.
pub fn dual_flow_velocity<T: Real>(
    flow: SemiflatFlow,
    forms: &SemiflatForms<T>,
    phase_rotated: bool,
) -> Result<Form<GridField<T>>, SemiflatError> {
    let (w, c) = flow.dual_weight::<T>();
    let weight = forms.norm_sq.map(|s| w.value(s));
    let hat = if phase_rotated { forms.phi.neg() } else { forms.phi_hat.clone() };
    let v = flow_velocity(&hat.times(&weight), &semiflat_frame::<T>())?;
    Ok(v.scale(c))
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityResidual {
    pub max_residual: f64,
    pub l2_residual: f64,
    /// Scale of `∂_t φ`, for reference.
    pub velocity_max: f64,
    pub min_det_g: f64,
}

/// `∂_t φ − c·dΛd(w φ̂)` at the middle state, with `∂_t φ` from the central
/// difference of the reconstructed forms of three consecutive metrics.
pub fn duality_residual<T: Real>(
    flow: SemiflatFlow,
    prev: &HessianMetricField<T>,
    mid: &HessianMetricField<T>,
    next: &HessianMetricField<T>,
    dt: T,
    phase_rotated: bool,
) -> Result<DualityResidual, SemiflatError> {
    let fp = reconstruct_forms(prev);
    let fm = reconstruct_forms(mid);
    let fn_ = reconstruct_forms(next);
    let pick = |f: &SemiflatForms<T>| if phase_rotated { f.phi_hat.clone() } else { f.phi.clone() };
    let dphi = pick(&fn_).sub(&pick(&fp))?.scale(T::one() / (T::lit(2.0) * dt));
    let v = dual_flow_velocity(flow, &fm, phase_rotated)?;
    let (max, l2) = form_norms(&dphi.sub(&v)?);
    Ok(DualityResidual {
        max_residual: max.as_f64(),
        l2_residual: l2.as_f64(),
        velocity_max: form_norms(&dphi).0.as_f64(),
        min_det_g: fm.det.min().as_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentIdentities {
    /// `max |∂_t g_jk − c ∂_j∂_k w(|φ|²)|`.
    pub metric: f64,
    /// `max |∂_t det g − c det g Σ g^{jk} ∂_j∂_k w(|φ|²)|`.
    pub determinant: f64,
    /// `max |Σ g^{jk} ∂_t g_jk − ∂_t det g / det g|`.
    pub trace: f64,
}

/// The componentwise identities behind the duality, with `∂_j∂_k`
/// evaluated as composed first differences.
pub fn component_identity_check<T: Real>(
    flow: SemiflatFlow,
    prev: &HessianMetricField<T>,
    mid: &HessianMetricField<T>,
    next: &HessianMetricField<T>,
    dt: T,
) -> Result<ComponentIdentities, SemiflatError> {
    let (w, c) = flow.dual_weight::<T>();
    let inv2dt = T::one() / (T::lit(2.0) * dt);
    let det = mid.det();
    let potential = det.scale(T::lit(4.0)).map(|s| w.value(s));
    let ginv = mid.inverse()?;
    let ddet = next.det().minus(&prev.det()).scale(inv2dt);
    let zero = GridField::uniform(mid.grid(), T::zero());
    let mut metric = T::zero();
    let mut contracted = zero.clone();
    let mut trace = zero;
    for j in 0..3 {
        let dj = potential.partial_or_zero(j);
        for k in 0..3 {
            let djk = dj.partial_or_zero(k);
            let dg = next.component(j, k).minus(prev.component(j, k)).scale(inv2dt);
            metric = metric.max(dg.minus(&djk.scale(c)).max_abs());
            contracted = contracted.plus(&ginv.component(j, k).times(&djk));
            trace = trace.plus(&ginv.component(j, k).times(&dg));
        }
    }
    let determinant = ddet.minus(&det.times(&contracted).scale(c)).max_abs();
    let quotient = ddet.times(&det.map(|x| T::one() / x));
    let trace_err = trace.minus(&quotient).max_abs();
    Ok(ComponentIdentities { metric: metric.as_f64(), determinant: determinant.as_f64(), trace: trace_err.as_f64() })
}

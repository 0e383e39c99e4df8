//! The flow family `∂_t φ = dΛ_ω d(w(|φ|²) φ̂)` with weights `1`,
//! `|φ|²/16`, `log|φ|²` and `|φ|^ε`, integrated on invariant ansatz
//! coordinates.

pub mod checks;
pub mod integrate;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::MetricLieFrame;
use crate::error::{ExteriorError, FlowError, HitchinError};
use crate::exterior::{Coefficient, Form, Frame};
use crate::hitchin::{lambda_invariant, TypeIIAStructure};
use crate::homogeneous::{Ansatz, Preset};
use crate::scalar::Real;

pub use checks::{metric_flow_check, stationary_check, MetricFlowReport, StationaryReport};
pub use oracle::{oracle, solvmanifold_limit, OracleName};

/// Default abort threshold for `|φ|²` under the logarithmic weight.
pub const LOG_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "eps")]
pub enum Weight {
    HitchinGradient,
    TypeIIA,
    DualRicci,
    EpsilonReg(f64),
}

impl Weight {
    /// `w(s)` as a function of `s = |φ|²`.
    pub fn value<T: Real>(&self, s: T) -> T {
        match *self {
            Weight::HitchinGradient => T::one(),
            Weight::TypeIIA => s / T::lit(16.0),
            Weight::DualRicci => s.ln(),
            Weight::EpsilonReg(eps) => s.powf(T::lit(eps / 2.0)),
        }
    }

    /// `dw/ds`.
    pub fn derivative<T: Real>(&self, s: T) -> T {
        match *self {
            Weight::HitchinGradient => T::zero(),
            Weight::TypeIIA => T::one() / T::lit(16.0),
            Weight::DualRicci => T::one() / s,
            Weight::EpsilonReg(eps) => T::lit(eps / 2.0) * s.powf(T::lit(eps / 2.0 - 1.0)),
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        match *self {
            Weight::EpsilonReg(eps) if !(eps > 0.0 && eps.is_finite()) => {
                Err(FlowError::InvalidSpec(format!("epsilon must be positive, got {eps}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Weight::HitchinGradient => "hitchin",
            Weight::TypeIIA => "type-iia",
            Weight::DualRicci => "dual-ricci",
            Weight::EpsilonReg(_) => "epsilon",
        }
    }

    /// Parses a CLI weight name; `eps` is used by `epsilon`.
    pub fn parse_with_eps(name: &str, eps: Option<f64>) -> Result<Self, FlowError> {
        let w = match name {
            "hitchin" | "hitchin-gradient" => Weight::HitchinGradient,
            "type-iia" | "typeiia" | "iia" => Weight::TypeIIA,
            "dual-ricci" | "dualricci" => Weight::DualRicci,
            "epsilon" | "eps" | "epsilon-reg" => Weight::EpsilonReg(
                eps.ok_or_else(|| FlowError::InvalidSpec("epsilon weight needs --eps".into()))?,
            ),
            other => return Err(FlowError::InvalidSpec(format!("unknown weight `{other}`"))),
        };
        w.validate()?;
        Ok(w)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::EpsilonReg(e) => write!(f, "epsilon({e})"),
            w => f.write_str(w.name()),
        }
    }
}

impl FromStr for Weight {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Weight::parse_with_eps(s, None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Integrator {
    Rk4 { dt: f64 },
    Rk45 { rtol: f64, atol: f64, dt0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec<T: Real> {
    pub weight: Weight,
    pub integrator: Integrator,
    pub horizon: T,
    /// Record every `record_stride`-th accepted step (the final state is
    /// always recorded).
    pub record_stride: usize,
    /// `|φ|²` below this aborts the logarithmic weight.
    pub log_floor: T,
}

impl<T: Real> Default for FlowSpec<T> {
    fn default() -> Self {
        FlowSpec {
            weight: Weight::HitchinGradient,
            integrator: Integrator::Rk4 { dt: 1e-3 },
            horizon: T::lit(10.0),
            record_stride: 1,
            log_floor: T::lit(LOG_FLOOR),
        }
    }
}

impl<T: Real> FlowSpec<T> {
    pub fn rk4(weight: Weight, dt: f64, horizon: T) -> Self {
        FlowSpec { weight, integrator: Integrator::Rk4 { dt }, horizon, ..Default::default() }
    }

    pub fn rk45(weight: Weight, rtol: f64, horizon: T) -> Self {
        FlowSpec {
            weight,
            integrator: Integrator::Rk45 { rtol, atol: rtol * 1e-3, dt0: 1e-3 },
            horizon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.weight.validate()?;
        let ok = match self.integrator {
            Integrator::Rk4 { dt } => dt > 0.0 && dt.is_finite(),
            Integrator::Rk45 { rtol, atol, dt0 } => rtol > 0.0 && atol >= 0.0 && dt0 > 0.0,
        };
        if !ok {
            return Err(FlowError::InvalidSpec("step size and tolerances must be positive".into()));
        }
        if !(self.horizon >= T::zero()) || self.record_stride == 0 {
            return Err(FlowError::InvalidSpec("horizon must be non-negative and stride positive".into()));
        }
        Ok(())
    }
}

/// `dΛ_ω d(β)` for a 3-form `β`, typically `w·φ̂`.
pub fn flow_velocity<T: Real, C: Coefficient<Scalar = T>>(
    weighted_hat: &Form<C>,
    frame: &Frame<T>,
) -> Result<Form<C>, ExteriorError> {
    let d1 = frame.exterior_d(weighted_hat)?;
    let l = frame.lambda(&d1)?;
    frame.exterior_d(&l)
}

/// `dΛ_ω d(w(|φ|²) φ̂)` for a constant-coefficient `φ`.
pub fn rhs<T: Real>(phi: &Form<T>, weight: Weight, frame: &Frame<T>) -> Result<Form<T>, FlowError> {
    rhs_with_floor(phi, weight, frame, T::lit(LOG_FLOOR))
}

fn rhs_with_floor<T: Real>(phi: &Form<T>, weight: Weight, frame: &Frame<T>, floor: T) -> Result<Form<T>, FlowError> {
    let s = TypeIIAStructure::pointwise(frame.omega().clone(), phi.clone())?;
    let n = s.norm_sq();
    if weight == Weight::DualRicci && n < floor {
        return Err(FlowError::BelowLogFloor(n.as_f64()));
    }
    Ok(flow_velocity(&s.phi_hat().scale(weight.value(n)), frame)?)
}

/// `dd†φ = −d⋆d⋆φ` computed with the Hodge star of `g_φ`.
pub fn hodge_laplacian_term<T: Real>(phi: &Form<T>, frame: &Frame<T>) -> Result<Form<T>, FlowError> {
    let s = TypeIIAStructure::pointwise(frame.omega().clone(), phi.clone())?;
    let star = frame.hodge_star(phi, s.g())?;
    let d_star = frame.exterior_d(&star)?;
    let co = frame.hodge_star(&d_star, s.g())?.neg();
    Ok(frame.exterior_d(&co)?)
}

/// Per-sample monitors along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics<T: Real> {
    pub norm_sq: T,
    /// `u = log|φ|²`.
    pub u: T,
    /// Hitchin density `½|φ|²`.
    pub hitchin_density: T,
    pub nij_sq: T,
    /// `‖dφ‖∞ / ‖φ‖∞`.
    pub d_resid: T,
    /// `‖ω∧φ‖∞ / ‖φ‖∞`.
    pub prim_resid: T,
    pub lambda: T,
}

pub fn diagnostics<T: Real>(phi: &Form<T>, frame: &Frame<T>) -> Result<Diagnostics<T>, FlowError> {
    let s = TypeIIAStructure::pointwise(frame.omega().clone(), phi.clone())?;
    let scale = phi.max_abs();
    let nij_sq = MetricLieFrame::from_structure(frame, &s)?.nijenhuis()?.norm_sq;
    let n = s.norm_sq();
    Ok(Diagnostics {
        norm_sq: n,
        u: n.ln(),
        hitchin_density: n * T::lit(0.5),
        nij_sq,
        d_resid: frame.exterior_d(phi)?.max_abs() / scale,
        prim_resid: frame.omega().wedge(phi)?.max_abs() / scale,
        lambda: lambda_invariant(phi)?,
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub preset: Preset,
    pub weight: Weight,
    pub param_names: Vec<&'static str>,
    pub times: Vec<T>,
    pub params: Vec<Vec<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
    /// Largest relative distance of the velocity from the ansatz span.
    pub max_projection_residual: T,
    pub steps: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_params(&self) -> &[T] {
        self.params.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend(self.param_names.iter().map(|s| s.to_string()));
        cols.extend(["normSq", "u", "H", "nijSq", "dResid", "primResid", "lambda"].map(String::from));
        if self.preset == Preset::SolvmanifoldTv {
            cols.extend(["alphaOverDelta", "betaOverGamma"].map(String::from));
        }
        cols.join(",")
    }

    /// CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for ((t, p), d) in self.times.iter().zip(&self.params).zip(&self.diagnostics) {
            let mut row = vec![*t];
            row.extend(p.iter().copied());
            row.extend([d.norm_sq, d.u, d.hitchin_density, d.nij_sq, d.d_resid, d.prim_resid, d.lambda]);
            if self.preset == Preset::SolvmanifoldTv && p.len() == 4 {
                row.extend([p[0] / p[3], p[1] / p[2]]);
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{:.16e}", v.as_f64())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

struct Problem<'a, T: Real> {
    ansatz: &'a Ansatz<T>,
    frame: &'a Frame<T>,
    weight: Weight,
    floor: T,
    worst_projection: T,
}

impl<T: Real> Problem<'_, T> {
    fn velocity(&mut self, t: T, p: &[T]) -> Result<Vec<T>, FlowError> {
        let phi = self.ansatz.form(p)?;
        let v = rhs_with_floor(&phi, self.weight, self.frame, self.floor).map_err(|e| match e {
            FlowError::Hitchin(HitchinError::NotPositive(l)) => FlowError::PositivityLost { t: t.as_f64(), lambda: l },
            other => other,
        })?;
        let proj = self.ansatz.project(&v)?;
        let rel = proj.residual / v.coefficient_norm().max(phi.coefficient_norm()).max(T::lit(1e-300));
        if rel > T::lit(1e-8) {
            return Err(FlowError::NotInvariant(rel.as_f64()));
        }
        self.worst_projection = self.worst_projection.max(rel);
        Ok(proj.coefficients)
    }
}

/// Integrates the projected ODE from `initial` ansatz parameters.
pub fn run<T: Real>(
    preset: Preset,
    ansatz: &Ansatz<T>,
    frame: &Frame<T>,
    initial: &[T],
    spec: &FlowSpec<T>,
) -> Result<Trajectory<T>, FlowError> {
    spec.validate()?;
    if initial.len() != ansatz.dim() {
        return Err(FlowError::InvalidInitial(format!(
            "expected {} parameters, got {}",
            ansatz.dim(),
            initial.len()
        )));
    }
    let phi0 = ansatz.form(initial)?;
    TypeIIAStructure::on_frame(frame, phi0).map_err(|e| FlowError::InvalidInitial(e.to_string()))?;

    let mut prob = Problem { ansatz, frame, weight: spec.weight, floor: spec.log_floor, worst_projection: T::zero() };
    let mut traj = Trajectory {
        preset,
        weight: spec.weight,
        param_names: ansatz.param_names.clone(),
        times: Vec::new(),
        params: Vec::new(),
        diagnostics: Vec::new(),
        max_projection_residual: T::zero(),
        steps: 0,
    };
    let record = |traj: &mut Trajectory<T>, t: T, p: &[T]| -> Result<(), FlowError> {
        let d = diagnostics(&ansatz.form(p)?, frame)?;
        traj.times.push(t);
        traj.params.push(p.to_vec());
        traj.diagnostics.push(d);
        Ok(())
    };

    let mut t = T::zero();
    let mut y = initial.to_vec();
    record(&mut traj, t, &y)?;
    let horizon = spec.horizon;
    let mut f = |t: T, y: &[T]| prob.velocity(t, y);
    match spec.integrator {
        Integrator::Rk4 { dt } => {
            let dt = T::lit(dt);
            let n = (horizon / dt).round().to_usize().unwrap_or(0);
            for i in 1..=n {
                y = integrate::rk4_step(&mut f, t, &y, dt)?;
                t = dt * T::lit(i as f64);
                traj.steps = i;
                if i % spec.record_stride == 0 || i == n {
                    record(&mut traj, t, &y)?;
                }
            }
        }
        Integrator::Rk45 { rtol, atol, dt0 } => {
            let (rtol, atol) = (T::lit(rtol), T::lit(atol));
            let mut h = T::lit(dt0).min(horizon);
            let mut accepted = 0usize;
            while t < horizon {
                if horizon - t < h {
                    h = horizon - t;
                }
                if h <= T::lit(1e-14) * (T::one() + t.abs()) {
                    return Err(FlowError::StepUnderflow(t.as_f64()));
                }
                let (y_new, err) = integrate::dopri_step(&mut f, t, &y, h)?;
                let e = integrate::error_norm(&err, &y, &y_new, rtol, atol);
                if e <= T::one() {
                    t += h;
                    y = y_new;
                    accepted += 1;
                    traj.steps = accepted;
                    let last = t >= horizon;
                    if accepted % spec.record_stride == 0 || last {
                        record(&mut traj, t, &y)?;
                    }
                }
                let factor = if e == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * e.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
                };
                h *= factor;
            }
        }
    }
    traj.max_projection_residual = prob.worst_projection;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{nilmanifold_ansatz, preset, solvmanifold_ansatz};

    fn nil() -> Frame<f64> {
        preset::<f64>(Preset::NilmanifoldDbt).unwrap().frame
    }

    fn solv() -> (Frame<f64>, f64) {
        let p = preset::<f64>(Preset::SolvmanifoldTv).unwrap();
        (p.frame, p.lambda.unwrap())
    }

    #[test]
    fn weights() {
        assert_eq!(Weight::HitchinGradient.value(4.0), 1.0);
        assert_eq!(Weight::TypeIIA.value(4.0), 0.25);
        assert!((Weight::DualRicci.value(std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert!((Weight::EpsilonReg(1.0).value(4.0f64) - 2.0).abs() < 1e-15);
        assert!(Weight::EpsilonReg(-1.0).validate().is_err());
        assert_eq!("type-iia".parse::<Weight>().unwrap(), Weight::TypeIIA);
        assert!("epsilon".parse::<Weight>().is_err());
        assert_eq!(Weight::parse_with_eps("epsilon", Some(0.5)).unwrap(), Weight::EpsilonReg(0.5));
    }

    #[test]
    fn torus_constant_form_is_stationary() {
        let f = preset::<f64>(Preset::Torus).unwrap().frame;
        let phi = nilmanifold_ansatz().form(&[0.3, 0.2]).unwrap();
        for w in [Weight::HitchinGradient, Weight::TypeIIA, Weight::DualRicci, Weight::EpsilonReg(0.5)] {
            assert!(rhs(&phi, w, &f).unwrap().is_empty());
        }
    }

    #[test]
    fn nilmanifold_rhs_closed_form() {
        let f = nil();
        let a = nilmanifold_ansatz::<f64>();
        for (x, y) in [(0.0, 0.0), (1.0, 0.5), (-0.2, 0.3), (3.0, 1.9)] {
            let v = rhs(&a.form(&[x, y]).unwrap(), Weight::HitchinGradient, &f).unwrap();
            let expected = Form::term(2.0 / (1.0f64 + x - y * y).sqrt(), &[1, 3, 5]);
            assert!(v.approx_eq(&expected, 1e-13), "{v}");
        }
    }

    #[test]
    fn lambda_of_weighted_dual_on_nilmanifold() {
        // Λ_ω d(|φ|²φ̂) = 4(e^{34} + 2b e^{35} − e^{56})
        let f = nil();
        let b = 0.4;
        let phi = nilmanifold_ansatz().form(&[0.7, b]).unwrap();
        let s = TypeIIAStructure::on_frame(&f, phi).unwrap();
        let l = f.lambda(&f.exterior_d(&s.phi_hat().scale(s.norm_sq())).unwrap()).unwrap();
        let expected: Form<f64> = "4 e^{34} + 3.2 e^{35} - 4 e^{56}".parse().unwrap();
        assert!(l.approx_eq(&expected, 1e-13), "{l}");
    }

    #[test]
    fn solvmanifold_rhs_closed_form() {
        let (f, lam) = solv();
        let [al, be, ga, de] = [0.7, 1.3, 2.1, 0.4];
        let phi = solvmanifold_ansatz().form(&[al, be, ga, de]).unwrap();
        let s = TypeIIAStructure::on_frame(&f, phi).unwrap();
        let v = flow_velocity(&s.phi_hat().scale(s.norm_sq()), &f).unwrap();
        let c = 16.0 * lam * lam;
        let expected = solvmanifold_ansatz()
            .form(&[c * al * be * ga, c * al * be * de, c * al * ga * de, c * be * ga * de])
            .unwrap();
        assert!(v.approx_eq(&expected, 1e-12 * c), "{v}");
    }

    #[test]
    fn hodge_laplacian_matches() {
        let f = nil();
        let phi = nilmanifold_ansatz().form(&[0.5, -0.3]).unwrap();
        let lhs = hodge_laplacian_term(&phi, &f).unwrap();
        let rhs = rhs(&phi, Weight::HitchinGradient, &f).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn rk45_matches_nil_oracle() {
        let f = nil();
        let a = nilmanifold_ansatz();
        let spec = FlowSpec::rk45(Weight::HitchinGradient, 1e-9, 2.0);
        let tr = run(Preset::NilmanifoldDbt, &a, &f, &[0.0, 0.0], &spec).unwrap();
        let exact = oracle(OracleName::Nilmanifold, 2.0, &[0.0, 0.0]).unwrap();
        assert!((tr.final_params()[0] - exact[0]).abs() < 1e-7);
        assert_eq!(*tr.times.last().unwrap(), 2.0);
    }

    #[test]
    fn rk4_order_on_nil() {
        let f = nil();
        let a = nilmanifold_ansatz();
        let exact = oracle(OracleName::Nilmanifold, 1.0, &[0.0, 0.0]).unwrap()[0];
        let err = |dt: f64| {
            let mut spec = FlowSpec::rk4(Weight::HitchinGradient, dt, 1.0);
            spec.record_stride = 1000;
            let tr = run(Preset::NilmanifoldDbt, &a, &f, &[0.0, 0.0], &spec).unwrap();
            (tr.final_params()[0] - exact).abs()
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn positivity_loss_is_reported() {
        let f = nil();
        let a = nilmanifold_ansatz();
        let spec = FlowSpec::rk4(Weight::HitchinGradient, 1e-3, 1.0);
        let err = run(Preset::NilmanifoldDbt, &a, &f, &[-1.0, 0.5], &spec).unwrap_err();
        assert!(matches!(err, FlowError::InvalidInitial(_)));
    }

    #[test]
    fn dual_ricci_floor() {
        let f = nil();
        let phi = nilmanifold_ansatz().form(&[0.0, 0.0]).unwrap().scale(1e-4);
        assert!(matches!(rhs(&phi, Weight::DualRicci, &f), Err(FlowError::BelowLogFloor(_))));
    }

    #[test]
    fn csv_layout() {
        let f = nil();
        let a = nilmanifold_ansatz();
        let mut spec = FlowSpec::rk4(Weight::HitchinGradient, 0.1, 0.2);
        spec.record_stride = 1;
        let tr = run(Preset::NilmanifoldDbt, &a, &f, &[0.0, 0.0], &spec).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,a,b,normSq,u,H,nijSq,dResid,primResid,lambda");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[3], "4.0000000000000000e0");
        assert_eq!(csv.lines().count(), 4);
    }
}

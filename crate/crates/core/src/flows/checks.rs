//! Eigenform and metric-evolution checks along homogeneous trajectories.

use serde::Serialize;

use super::{rhs, Trajectory, Weight};
use crate::curvature::MetricLieFrame;
use crate::error::FlowError;
use crate::exterior::{Form, Frame};
use crate::hitchin::TypeIIAStructure;
use crate::homogeneous::Ansatz;
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport<T: Real> {
    /// Minimizer `c` of `‖dΛ_ω dφ̂ − cφ‖`.
    pub best_c: T,
    pub residual: T,
}

/// `min_c ‖dΛ_ω dφ̂ − cφ‖` in the coefficient Euclidean norm.
pub fn stationary_check<T: Real>(phi: &Form<T>, frame: &Frame<T>) -> Result<StationaryReport<T>, FlowError> {
    let v = rhs(phi, Weight::HitchinGradient, frame)?;
    let pp = phi.coefficient_dot(phi);
    let c = if pp > T::zero() { v.coefficient_dot(phi) / pp } else { T::zero() };
    let residual = v.sub(&phi.scale(c))?.coefficient_norm();
    Ok(StationaryReport { best_c: c, residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricFlowReport<T: Real> {
    /// `max ‖∂_t g − (−Ric + Ric(J·,J·))‖ / ‖−Ric + Ric(J·,J·)‖`.
    pub metric_rel_error: T,
    /// `max |∂_t u − |N|²| / |N|²`.
    pub u_rel_error: T,
    pub samples: usize,
}

fn relative<T: Real>(err: T, scale: T) -> T {
    let floor = T::lit(1e-13);
    if scale <= floor {
        if err <= floor {
            T::zero()
        } else {
            err / floor
        }
    } else {
        err / scale
    }
}

/// Central differences of `g_φ(t)` and `u(t)` against the anti-complexified
/// Ricci tensor and `|N|²` at interior samples with equal spacing.
pub fn metric_flow_check<T: Real>(
    traj: &Trajectory<T>,
    ansatz: &Ansatz<T>,
    frame: &Frame<T>,
) -> Result<MetricFlowReport<T>, FlowError> {
    let n = traj.len();
    let structure = |k: usize| -> Result<TypeIIAStructure<T>, FlowError> {
        Ok(TypeIIAStructure::pointwise(frame.omega().clone(), ansatz.form(&traj.params[k])?)?)
    };
    let mut metric_rel = T::zero();
    let mut u_rel = T::zero();
    let mut samples = 0;
    for k in 1..n.saturating_sub(1) {
        let (t0, t1, t2) = (traj.times[k - 1], traj.times[k], traj.times[k + 1]);
        let h = t2 - t0;
        if ((t1 - t0) - (t2 - t1)).abs() > T::lit(1e-9) * h {
            continue;
        }
        let (s0, s1, s2) = (structure(k - 1)?, structure(k)?, structure(k + 1)?);
        let dg = (s2.g() - s0.g()) / h;
        let m = MetricLieFrame::from_structure(frame, &s1)?;
        let target = m.anti_complexified_ricci()?;
        metric_rel = metric_rel.max(relative((dg - target).amax(), target.amax()));
        let du = (traj.diagnostics[k + 1].u - traj.diagnostics[k - 1].u) / h;
        let nij = traj.diagnostics[k].nij_sq;
        u_rel = u_rel.max(relative((du - nij).abs(), nij.abs()));
        samples += 1;
    }
    Ok(MetricFlowReport { metric_rel_error: metric_rel, u_rel_error: u_rel, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{run, solvmanifold_limit, FlowSpec};
    use crate::homogeneous::{nilmanifold_ansatz, preset, solvmanifold_ansatz, Preset};

    #[test]
    fn solvmanifold_limit_is_eigenform() {
        let p = preset::<f64>(Preset::SolvmanifoldTv).unwrap();
        let l = p.lambda.unwrap();
        let phi = solvmanifold_ansatz().form(&solvmanifold_limit(&[1.0, 2.0, 2.0, 1.0]).unwrap()).unwrap();
        let r = stationary_check(&phi, &p.frame).unwrap();
        assert!(r.residual < 1e-12);
        assert!((r.best_c - 2.0 * l * l).abs() < 1e-12);
    }

    #[test]
    fn torus_is_trivially_stationary() {
        let f = preset::<f64>(Preset::Torus).unwrap().frame;
        let r = stationary_check(&nilmanifold_ansatz().form(&[0.0, 0.0]).unwrap(), &f).unwrap();
        assert_eq!((r.best_c, r.residual), (0.0, 0.0));
    }

    #[test]
    fn generic_nil_point_is_not_eigenform() {
        let f = preset::<f64>(Preset::NilmanifoldDbt).unwrap().frame;
        let r = stationary_check(&nilmanifold_ansatz().form(&[1.0, 0.5]).unwrap(), &f).unwrap();
        assert!(r.residual > 0.1, "{}", r.residual);
    }

    #[test]
    fn metric_flow_on_short_runs() {
        for p in Preset::ALL {
            let lf = preset::<f64>(p).unwrap();
            let (a, init) = match p {
                Preset::SolvmanifoldTv => (solvmanifold_ansatz(), vec![1.0, 2.0, 2.0, 1.0]),
                _ => (nilmanifold_ansatz(), vec![0.2, 0.3]),
            };
            let spec = FlowSpec::rk4(Weight::HitchinGradient, 1e-3, 0.02);
            let tr = run(p, &a, &lf.frame, &init, &spec).unwrap();
            let r = metric_flow_check(&tr, &a, &lf.frame).unwrap();
            assert_eq!(r.samples, 19);
            assert!(r.metric_rel_error < 1e-4, "{p}: {}", r.metric_rel_error);
            assert!(r.u_rel_error < 1e-4, "{p}: {}", r.u_rel_error);
            if p == Preset::Torus {
                assert_eq!((r.metric_rel_error, r.u_rel_error), (0.0, 0.0));
            }
        }
    }
}

//! Semi-flat T-duality: periodic Hessian metric flows on `T³` and the
//! corresponding 3-form flows on `T³ × R³`.

pub mod forms;
pub mod grid;
pub mod metric;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use forms::{
    component_identity_check, dual_flow_velocity, duality_residual, pointwise_check, reconstruct_forms,
    semiflat_frame, ComponentIdentities, DualityResidual, PointwiseReport, SemiflatForms,
};
pub use grid::{FieldData, Grid, GridField};
pub use metric::{
    cfl_bound, iib_rhs, kr_rhs, rk4_step, HessianMetricField, Mode, Potential, SemiflatFlow, COMPONENT_NAMES,
};

use crate::error::SemiflatError;
use crate::scalar::Real;

/// Run parameters for a semi-flat duality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiflatConfig {
    pub n: usize,
    pub flow: SemiflatFlow,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub potential: Potential,
    /// Evaluate the residual every `residual_stride` interior steps.
    #[serde(default = "one")]
    pub residual_stride: usize,
    /// Check the pair `(φ̂, −φ)` instead of `(φ, φ̂)`.
    #[serde(default)]
    pub phase_rotated: bool,
}

fn one() -> usize {
    1
}

impl Default for SemiflatConfig {
    fn default() -> Self {
        SemiflatConfig {
            n: 32,
            flow: SemiflatFlow::Iib,
            dt: 1e-5,
            steps: 100,
            potential: Potential::default(),
            residual_stride: 1,
            phase_rotated: false,
        }
    }
}

impl SemiflatConfig {
    pub fn validate(&self) -> Result<Grid, SemiflatError> {
        let grid = Grid::new(self.n)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SemiflatError::InitialData(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps < 2 {
            return Err(SemiflatError::ShortTrajectory);
        }
        if self.residual_stride == 0 {
            return Err(SemiflatError::InitialData("residual_stride must be at least 1".into()));
        }
        self.potential.validate()?;
        Ok(grid)
    }
}

/// Residual of the dual 3-form flow at one time step.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub step: usize,
    pub t: f64,
    pub max_residual: f64,
    pub l2_residual: f64,
    pub min_det_g: f64,
}

#[derive(Clone, Debug)]
pub struct SemiflatRun<T: Real> {
    pub config: SemiflatConfig,
    pub rows: Vec<ResidualRow>,
    /// Componentwise identities at the first interior step.
    pub identities: ComponentIdentities,
    pub initial: HessianMetricField<T>,
    pub last: HessianMetricField<T>,
}

impl<T: Real> SemiflatRun<T> {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.max_residual))
    }

    pub fn residual_csv(&self) -> String {
        let mut s = String::from("step,maxResidual,l2Residual,minDetG\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", r.step, r.max_residual, r.l2_residual, r.min_det_g));
        }
        s
    }
}

/// Integrates the metric flow with RK4 and records the duality residual at
/// interior steps, keeping a three-state window.
pub fn run<T: Real>(config: &SemiflatConfig) -> Result<SemiflatRun<T>, SemiflatError> {
    let grid = config.validate()?;
    let g0 = config.potential.hessian::<T>(grid)?;
    g0.check_positive()?;
    let bound = cfl_bound(&g0).as_f64();
    if config.dt > bound {
        return Err(SemiflatError::Cfl { dt: config.dt, bound });
    }
    let dt = T::lit(config.dt);
    let flow = config.flow;
    let mut prev = g0.clone();
    let mut mid = rk4_step(flow, &prev, dt)?;
    let mut rows = Vec::new();
    let mut identities = None;
    for step in 1..config.steps {
        let next = rk4_step(flow, &mid, dt)?;
        if identities.is_none() {
            identities = Some(component_identity_check(flow, &prev, &mid, &next, dt)?);
        }
        if (step - 1) % config.residual_stride == 0 {
            let r = duality_residual(flow, &prev, &mid, &next, dt, config.phase_rotated)?;
            rows.push(ResidualRow {
                step,
                t: step as f64 * config.dt,
                max_residual: r.max_residual,
                l2_residual: r.l2_residual,
                min_det_g: r.min_det_g,
            });
        }
        prev = mid;
        mid = next;
    }
    Ok(SemiflatRun {
        config: config.clone(),
        rows,
        identities: identities.expect("steps >= 2"),
        initial: g0,
        last: mid,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementStudy {
    pub sizes: Vec<usize>,
    pub residuals: Vec<f64>,
    /// `log₂(r_N / r_{2N})` for consecutive sizes.
    pub pairwise_orders: Vec<f64>,
    /// Least-squares slope of `log r` against `log h`.
    pub fitted_order: f64,
}

/// Maximum duality residual over a sequence of grid sizes.
pub fn refinement_study<T: Real>(base: &SemiflatConfig, sizes: &[usize]) -> Result<RefinementStudy, SemiflatError> {
    let mut residuals = Vec::new();
    for &n in sizes {
        let cfg = SemiflatConfig { n, ..base.clone() };
        residuals.push(run::<T>(&cfg)?.max_residual());
    }
    let pairwise_orders = sizes
        .windows(2)
        .zip(residuals.windows(2))
        .map(|(n, r)| (r[0] / r[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| (1.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RefinementStudy { sizes: sizes.to_vec(), residuals, pairwise_orders, fitted_order: sxy / sxx })
}

/// Little-endian `f64` dump of the six packed components, each row-major
/// in `x¹x²x³`.
pub fn dump_bytes<T: Real>(g: &HessianMetricField<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(6 * g.grid().len() * 8);
    for c in g.components() {
        for i in 0..g.grid().len() {
            out.extend_from_slice(&c.at(i).as_f64().to_le_bytes());
        }
    }
    out
}

/// JSON sidecar describing [`dump_bytes`].
pub fn dump_sidecar<T: Real>(g: &HessianMetricField<T>, file: &str) -> serde_json::Value {
    let n = g.grid().n();
    json!({
        "file": file,
        "dtype": "float64",
        "byte_order": "little",
        "layout": "row-major",
        "shape": [6, n, n, n],
        "axes": ["component", "x1", "x2", "x3"],
        "components": COMPONENT_NAMES,
        "spacing": 1.0 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Coefficient;

    fn short(n: usize, flow: SemiflatFlow, potential: Potential) -> SemiflatConfig {
        SemiflatConfig { n, flow, dt: 1e-5, steps: 3, potential, residual_stride: 1, phase_rotated: false }
    }

    #[test]
    fn config_roundtrip_and_unknown_fields() {
        let c = SemiflatConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SemiflatConfig>(&s).unwrap(), c);
        let bad = s.replacen("\"n\"", "\"grid\"", 1);
        assert!(serde_json::from_str::<SemiflatConfig>(&bad).is_err());
        let t: SemiflatConfig = toml::from_str("n = 16\nflow = \"kr\"\ndt = 1e-5\nsteps = 4\n").unwrap();
        assert_eq!(t.flow, SemiflatFlow::Kr);
        assert_eq!(t.potential, Potential::default());
    }

    #[test]
    fn cfl_violation_rejected() {
        let mut c = short(64, SemiflatFlow::Iib, Potential::default());
        c.dt = 1e-4;
        assert!(matches!(run::<f64>(&c), Err(SemiflatError::Cfl { .. })));
    }

    #[test]
    fn flat_metric_has_zero_residual() {
        for flow in [SemiflatFlow::Iib, SemiflatFlow::Kr] {
            let r = run::<f64>(&short(8, flow, Potential::flat())).unwrap();
            assert!(r.max_residual() <= 1e-12, "{}", r.max_residual());
            assert!(r.identities.metric <= 1e-12);
        }
    }

    #[test]
    fn reconstruction_matches_pointwise_construction() {
        let p = Potential {
            a: [[1.2, 0.1, 0.0], [0.1, 0.9, -0.05], [0.0, -0.05, 1.0]],
            modes: vec![Mode { k: [1, 0, 0], eps: 4e-3, theta: 0.3 }, Mode { k: [0, 1, 1], eps: 1e-3, theta: 1.1 }],
        };
        let g = p.hessian::<f64>(Grid::new(8).unwrap()).unwrap();
        let f = reconstruct_forms(&g);
        let pts: Vec<usize> = (0..512).step_by(37).collect();
        let rep = pointwise_check(&g, &f, &pts).unwrap();
        assert!(rep.phi_hat_error < 1e-12, "{rep:?}");
        assert!(rep.norm_error < 1e-12, "{rep:?}");
        assert!(rep.complex_structure_error < 1e-12, "{rep:?}");
        assert!(rep.primitivity < 1e-12, "{rep:?}");
        let e135 = crate::exterior::Blade::from_labels(&[1, 3, 5]).unwrap();
        assert!(f.phi.coefficient(e135).unwrap().minus(&f.det).max_abs() < 1e-14);
    }

    #[test]
    fn closedness_is_second_order() {
        let p = Potential { a: metric_identity(), modes: vec![Mode { k: [2, 1, 0], eps: 1e-3, theta: 0.4 }] };
        let err = |n: usize| {
            let g = p.hessian::<f64>(Grid::new(n).unwrap()).unwrap();
            let f = reconstruct_forms(&g);
            let fr = semiflat_frame::<f64>();
            let a = forms::form_norms(&fr.exterior_d(&f.phi).unwrap()).0;
            let b = forms::form_norms(&fr.exterior_d(&f.phi_hat).unwrap()).0;
            a.max(b)
        };
        let (e8, e16) = (err(16), err(32));
        assert!(e16 > 0.0 && e8 / e16 > 3.5, "{e8} {e16}");
    }

    fn metric_identity() -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn residual_decreases_under_refinement() {
        for flow in [SemiflatFlow::Iib, SemiflatFlow::Kr] {
            for phase in [false, true] {
                let mut c = short(8, flow, Potential::default());
                c.phase_rotated = phase;
                let s = refinement_study::<f64>(&c, &[16, 32]).unwrap();
                assert!(s.pairwise_orders[0] > 1.7, "{flow} {phase}: {s:?}");
            }
        }
    }

    #[test]
    fn component_identities_converge() {
        let p = Potential::default();
        let e = |n: usize| run::<f64>(&short(n, SemiflatFlow::Iib, p.clone())).unwrap().identities;
        let (a, b) = (e(8), e(16));
        assert!(a.metric / b.metric > 3.0, "{a:?} {b:?}");
        assert!(a.determinant / b.determinant > 3.0, "{a:?} {b:?}");
        assert!(b.trace < 1e-6, "{b:?}");
    }

    #[test]
    fn dump_layout() {
        let g = Potential::default().hessian::<f64>(Grid::new(8).unwrap()).unwrap();
        let bytes = dump_bytes(&g);
        assert_eq!(bytes.len(), 6 * 512 * 8);
        let idx = Grid::new(8).unwrap().index(1, 2, 3);
        let off = (3 * 512 + idx) * 8;
        let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        assert_eq!(v, g.component(1, 1).at(idx));
        assert_eq!(dump_sidecar(&g, "g.bin")["shape"], json!([6, 8, 8, 8]));
    }
}


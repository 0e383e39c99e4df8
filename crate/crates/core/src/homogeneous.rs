//! Invariant coframes on the torus, the nilmanifold with `de⁴ = e^{15}`,
//! `de⁶ = e^{13}`, and the completely solvable solvmanifold with
//! `λ = log((3+√5)/2)`, together with their flow-invariant ansatz families.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{ExteriorError, GeometryError};
use crate::exterior::{standard_omega, Blade, Form, Frame, DIM};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Torus,
    NilmanifoldDbt,
    SolvmanifoldTv,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Torus, Preset::NilmanifoldDbt, Preset::SolvmanifoldTv];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Torus => "torus",
            Preset::NilmanifoldDbt => "nilmanifold",
            Preset::SolvmanifoldTv => "solvmanifold",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "torus" => Ok(Preset::Torus),
            "nilmanifold" | "nilmanifold_dbt" | "nil" => Ok(Preset::NilmanifoldDbt),
            "solvmanifold" | "solvmanifold_tv" | "solv" => Ok(Preset::SolvmanifoldTv),
            _ => Err(GeometryError::UnknownPreset(s.to_string())),
        }
    }
}

/// `log((3+√5)/2)`.
pub fn solvmanifold_lambda<T: Real>() -> T {
    T::lit(((3.0 + 5f64.sqrt()) / 2.0).ln())
}

/// A constant-coefficient frame with `ω = e^{12}+e^{34}+e^{56}`.
#[derive(Clone, Debug)]
pub struct LieFrame<T: Real> {
    pub preset: Preset,
    pub frame: Frame<T>,
    /// Structure parameter of the solvable preset.
    pub lambda: Option<T>,
}

impl<T: Real> LieFrame<T> {
    pub fn name(&self) -> &'static str {
        self.preset.name()
    }
}

fn e<T: Real>(c: T, labels: &[usize]) -> Form<T> {
    Form::term(c, labels)
}

fn sum<T: Real>(degree: usize, parts: &[(T, &[usize])]) -> Form<T> {
    Form::from_terms(degree, parts.iter().map(|(c, l)| (Blade::from_labels(l).unwrap(), *c)))
}

pub fn preset<T: Real>(p: Preset) -> Result<LieFrame<T>, ExteriorError> {
    let z = || Form::zero(2);
    let one = T::one();
    let (table, lambda) = match p {
        Preset::Torus => ([z(), z(), z(), z(), z(), z()], None),
        Preset::NilmanifoldDbt => ([z(), z(), z(), e(one, &[1, 5]), z(), e(one, &[1, 3])], None),
        Preset::SolvmanifoldTv => {
            let l = solvmanifold_lambda::<T>();
            (
                [e(-l, &[1, 5]), e(l, &[2, 5]), e(-l, &[3, 6]), e(l, &[4, 6]), z(), z()],
                Some(l),
            )
        }
    };
    Ok(LieFrame { preset: p, frame: Frame::new(table, standard_omega())?, lambda })
}

pub fn preset_by_name<T: Real>(name: &str) -> Result<LieFrame<T>, GeometryError> {
    Ok(preset(name.parse()?)?)
}

/// The affine family `φ(p) = base + Σ p_i directions_i`.
#[derive(Clone, Debug)]
pub struct Ansatz<T: Real> {
    pub base: Form<T>,
    pub directions: Vec<Form<T>>,
    pub param_names: Vec<&'static str>,
    design: DMatrix<T>,
}

/// Least-squares fit of a 3-form onto the ansatz directions.
#[derive(Clone, Debug)]
pub struct Projection<T: Real> {
    pub coefficients: Vec<T>,
    /// `‖v − Σ c_i d_i‖` in the coefficient Euclidean norm.
    pub residual: T,
}

impl<T: Real> Ansatz<T> {
    pub fn new(base: Form<T>, directions: Vec<Form<T>>, param_names: Vec<&'static str>) -> Self {
        let rows = Blade::all_of_degree(3).len();
        let mut design = DMatrix::zeros(rows, directions.len());
        for (j, d) in directions.iter().enumerate() {
            for (i, v) in d.to_dense().into_iter().enumerate() {
                design[(i, j)] = v;
            }
        }
        Ansatz { base, directions, param_names, design }
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn form(&self, params: &[T]) -> Result<Form<T>, GeometryError> {
        if params.len() != self.dim() {
            return Err(GeometryError::ParameterCount { expected: self.dim(), found: params.len() });
        }
        let mut phi = self.base.clone();
        for (p, d) in params.iter().zip(&self.directions) {
            phi = phi.add(&d.scale(*p))?;
        }
        Ok(phi)
    }

    /// Velocity coordinates of a 3-form tangent to the family.
    pub fn project(&self, v: &Form<T>) -> Result<Projection<T>, GeometryError> {
        if v.degree() != 3 {
            return Err(ExteriorError::DegreeMismatch(v.degree(), 3).into());
        }
        let b = DVector::from_vec(v.to_dense());
        let svd = self.design.clone().svd(true, true);
        let x = svd.solve(&b, T::lit(1e-14)).map_err(|_| GeometryError::InvalidAnsatz("well-conditioned"))?;
        let residual = (&self.design * &x - &b).norm();
        Ok(Projection { coefficients: x.iter().copied().collect(), residual })
    }

    /// Checks that the member at `params` is closed and primitive on `frame`.
    pub fn verify(&self, frame: &Frame<T>, params: &[T]) -> Result<(), GeometryError> {
        let phi = self.form(params)?;
        let scale = phi.max_abs().max(T::one());
        if frame.exterior_d(&phi)?.max_abs() > T::lit(1e-12) * scale {
            return Err(GeometryError::InvalidAnsatz("closed"));
        }
        if frame.omega().wedge(&phi)?.max_abs() > T::lit(1e-12) * scale {
            return Err(GeometryError::InvalidAnsatz("primitive"));
        }
        Ok(())
    }
}

/// `φ_{a,b} = (1+a)e^{135} − e^{146} − e^{245} − e^{236} + b(e^{134} − e^{156})`.
pub fn nilmanifold_ansatz<T: Real>() -> Ansatz<T> {
    let one = T::one();
    let base = sum(3, &[(one, &[1, 3, 5]), (-one, &[1, 4, 6]), (-one, &[2, 4, 5]), (-one, &[2, 3, 6])]);
    let da = e(one, &[1, 3, 5]);
    let db = sum(3, &[(one, &[1, 3, 4]), (-one, &[1, 5, 6])]);
    Ansatz::new(base, vec![da, db], vec!["a", "b"])
}

/// `α(e^{135}+e^{136}) + β(e^{145}−e^{146}) + γ(e^{235}−e^{236}) − δ(e^{245}+e^{246})`.
pub fn solvmanifold_ansatz<T: Real>() -> Ansatz<T> {
    let one = T::one();
    let dirs = vec![
        sum(3, &[(one, &[1, 3, 5]), (one, &[1, 3, 6])]),
        sum(3, &[(one, &[1, 4, 5]), (-one, &[1, 4, 6])]),
        sum(3, &[(one, &[2, 3, 5]), (-one, &[2, 3, 6])]),
        sum(3, &[(-one, &[2, 4, 5]), (-one, &[2, 4, 6])]),
    ];
    Ansatz::new(Form::zero(3), dirs, vec!["alpha", "beta", "gamma", "delta"])
}

/// The torus carries the nilmanifold family, on which every member is
/// constant and hence stationary.
pub fn ansatz<T: Real>(p: Preset) -> Ansatz<T> {
    match p {
        Preset::Torus | Preset::NilmanifoldDbt => nilmanifold_ansatz(),
        Preset::SolvmanifoldTv => solvmanifold_ansatz(),
    }
}

/// `d(d e^i)` for every coframe element, as the largest coefficient.
pub fn jacobi_residual<T: Real>(frame: &Frame<T>) -> Result<T, ExteriorError> {
    let mut worst = T::zero();
    for i in 0..DIM {
        worst = worst.max(frame.exterior_d(frame.differential(i))?.max_abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::{adapted_phi, norm_squared};

    #[test]
    fn preset_tables() {
        let t = preset::<f64>(Preset::Torus).unwrap();
        assert!(t.frame.differentials().iter().all(|d| d.is_empty()));
        let n = preset::<f64>(Preset::NilmanifoldDbt).unwrap();
        assert_eq!(n.frame.differential(3), &e(1.0, &[1, 5]));
        assert_eq!(n.frame.differential(5), &e(1.0, &[1, 3]));
        for i in [0, 1, 2, 4] {
            assert!(n.frame.differential(i).is_empty());
        }
        let s = preset::<f64>(Preset::SolvmanifoldTv).unwrap();
        let l = s.lambda.unwrap();
        assert!((l - 0.962_423_650_119_206_9).abs() < 1e-15);
        assert_eq!(s.frame.differential(2), &e(-l, &[3, 6]));
        assert!(s.frame.differential(4).is_empty() && s.frame.differential(5).is_empty());
    }

    #[test]
    fn jacobi_on_presets() {
        for p in Preset::ALL {
            let f = preset::<f64>(p).unwrap();
            assert!(jacobi_residual(&f.frame).unwrap() < 1e-14);
            assert!(f.frame.exterior_d(f.frame.omega()).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("nilmanifold_dbt".parse::<Preset>().unwrap(), Preset::NilmanifoldDbt);
        assert_eq!("solvmanifold-tv".parse::<Preset>().unwrap(), Preset::SolvmanifoldTv);
        assert!(matches!("klein".parse::<Preset>(), Err(GeometryError::UnknownPreset(_))));
    }

    #[test]
    fn solvmanifold_leibniz() {
        let s = preset::<f64>(Preset::SolvmanifoldTv).unwrap();
        let l = s.lambda.unwrap();
        // d(e^{35}) = de³∧e⁵ = −λ e^{365} = λ e^{356}
        let d = s.frame.exterior_d(&e(1.0, &[3, 5])).unwrap();
        assert!(d.approx_eq(&e(l, &[3, 5, 6]), 1e-15));
        let n = preset::<f64>(Preset::NilmanifoldDbt).unwrap();
        assert!(n.frame.exterior_d(&e(1.0, &[1, 3])).unwrap().is_empty());
    }

    #[test]
    fn nilmanifold_family_closed_primitive() {
        let n = preset::<f64>(Preset::NilmanifoldDbt).unwrap();
        let a = nilmanifold_ansatz::<f64>();
        assert!(a.form(&[0.0, 0.0]).unwrap().approx_eq(&adapted_phi().scale(2.0), 1e-15));
        for (x, y) in [(0.0, 0.0), (1.0, 0.5), (-0.3, 0.7), (5.0, -2.0)] {
            a.verify(&n.frame, &[x, y]).unwrap();
        }
    }

    #[test]
    fn solvmanifold_family_closed_primitive() {
        let s = preset::<f64>(Preset::SolvmanifoldTv).unwrap();
        let a = solvmanifold_ansatz::<f64>();
        a.verify(&s.frame, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        a.verify(&s.frame, &[0.3, 1.7, 0.2, 5.0]).unwrap();
        let phi = a.form(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let n = norm_squared(&phi, s.frame.omega()).unwrap();
        assert!((n * n - 64.0).abs() < 1e-12);
    }

    #[test]
    fn projection_recovers_coordinates() {
        let a = solvmanifold_ansatz::<f64>();
        let v = a.form(&[0.5, -1.0, 2.0, 3.0]).unwrap();
        let p = a.project(&v).unwrap();
        assert!(p.residual < 1e-14);
        for (x, y) in p.coefficients.iter().zip([0.5, -1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-14);
        }
        let off = a.project(&e(1.0, &[1, 2, 3])).unwrap();
        assert!((off.residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parameter_count_checked() {
        let a = nilmanifold_ansatz::<f64>();
        assert!(matches!(a.form(&[1.0]), Err(GeometryError::ParameterCount { expected: 2, found: 1 })));
    }
}

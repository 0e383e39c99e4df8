//! Closed-form Hitchin gradient trajectories on the nilmanifold and
//! solvmanifold ansatz families.

use std::str::FromStr;

use crate::error::FlowError;
use crate::homogeneous::solvmanifold_lambda;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleName {
    Nilmanifold,
    Solvmanifold,
}

impl FromStr for OracleName {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nilmanifold" | "nilmanifold_dbt" => Ok(OracleName::Nilmanifold),
            "solvmanifold" | "solvmanifold_tv" => Ok(OracleName::Solvmanifold),
            other => Err(FlowError::InvalidSpec(format!("no closed form for `{other}`"))),
        }
    }
}

/// Exact parameters at raw flow time `t`.
pub fn oracle<T: Real>(name: OracleName, t: T, initial: &[T]) -> Result<Vec<T>, FlowError> {
    match name {
        OracleName::Nilmanifold => nilmanifold_closed_form(t, initial),
        OracleName::Solvmanifold => {
            let l = solvmanifold_lambda::<T>();
            solvmanifold_closed_form(T::lit(2.0) * l * l * t, initial)
        }
    }
}

/// `(1+a−b₀²)^{3/2} = (1+a₀−b₀²)^{3/2} + 3t`, `b ≡ b₀`.
pub fn nilmanifold_closed_form<T: Real>(t: T, initial: &[T]) -> Result<Vec<T>, FlowError> {
    let [a0, b0] = match initial {
        [a, b] => [*a, *b],
        _ => return Err(FlowError::InvalidInitial("nilmanifold takes (a, b)".into())),
    };
    let q = T::one() + a0 - b0 * b0;
    if !(q > T::zero()) {
        return Err(FlowError::InvalidInitial(format!("1 + a - b^2 = {q} is not positive")));
    }
    let c = q.powf(T::lit(1.5)) + T::lit(3.0) * t;
    Ok(vec![c.powf(T::lit(2.0 / 3.0)) - T::one() + b0 * b0, b0])
}

struct SolvConstants<T> {
    c1: T,
    c2: T,
    a: T,
    b: T,
}

fn solv_constants<T: Real>(initial: &[T]) -> Result<SolvConstants<T>, FlowError> {
    let [al, be, ga, de] = match initial {
        [a, b, c, d] => [*a, *b, *c, *d],
        _ => return Err(FlowError::InvalidInitial("solvmanifold takes (alpha, beta, gamma, delta)".into())),
    };
    if !(al > T::zero() && be > T::zero() && ga > T::zero() && de > T::zero()) {
        return Err(FlowError::InvalidInitial("solvmanifold parameters must be positive".into()));
    }
    let c1 = al / de;
    let c2 = be / ga;
    let half = T::lit(0.5);
    let a = half * (de * c1.sqrt() + ga * c2.sqrt());
    let b = half * (de * c1.sqrt() - ga * c2.sqrt());
    Ok(SolvConstants { c1, c2, a, b })
}

/// `α = √C₁(Ae^τ+Be^{−τ})`, `β = √C₂(Ae^τ−Be^{−τ})`,
/// `γ = (Ae^τ−Be^{−τ})/√C₂`, `δ = (Ae^τ+Be^{−τ})/√C₁` in rescaled time `τ`.
pub fn solvmanifold_closed_form<T: Real>(tau: T, initial: &[T]) -> Result<Vec<T>, FlowError> {
    let k = solv_constants(initial)?;
    let p = k.a * tau.exp() + k.b * (-tau).exp();
    let m = k.a * tau.exp() - k.b * (-tau).exp();
    let (s1, s2) = (k.c1.sqrt(), k.c2.sqrt());
    Ok(vec![s1 * p, s2 * m, m / s2, p / s1])
}

/// Parameters of `φ_∞ = lim φ/|φ|`: `(√(C₁/8), √(C₂/8), √(1/(8C₂)), √(1/(8C₁)))`.
pub fn solvmanifold_limit<T: Real>(initial: &[T]) -> Result<Vec<T>, FlowError> {
    let k = solv_constants(initial)?;
    let e = T::lit(8.0);
    Ok(vec![(k.c1 / e).sqrt(), (k.c2 / e).sqrt(), (T::one() / (e * k.c2)).sqrt(), (T::one() / (e * k.c1)).sqrt()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nil_at_zero_and_one() {
        let p = oracle(OracleName::Nilmanifold, 0.0, &[0.3, 0.2]).unwrap();
        assert!((p[0] - 0.3f64).abs() < 1e-15 && p[1] == 0.2);
        let a = oracle(OracleName::Nilmanifold, 1.0, &[0.0, 0.0]).unwrap()[0];
        assert!((a - (4f64.powf(2.0 / 3.0) - 1.0)).abs() < 1e-15);
        assert!(oracle(OracleName::Nilmanifold, 1.0, &[-2.0, 0.0]).is_err());
    }

    #[test]
    fn solv_constants_for_reference_initial() {
        let k = solv_constants(&[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!((k.c1, k.c2, k.a, k.b), (1.0, 1.0, 1.5, -0.5));
        let p = solvmanifold_closed_form(0.0f64, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        for (x, y) in p.iter().zip([1.0, 2.0, 2.0, 1.0]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn solv_ratios_and_ode() {
        // in rescaled time α' = αβγ/√(αβγδ), β' = αβδ/√(αβγδ), and so on
        let init = [0.7f64, 1.3, 2.1, 0.4];
        let tau = 0.3;
        let h = 1e-5;
        let p = solvmanifold_closed_form(tau, &init).unwrap();
        let fwd = solvmanifold_closed_form(tau + h, &init).unwrap();
        let bwd = solvmanifold_closed_form(tau - h, &init).unwrap();
        let root = (p[0] * p[1] * p[2] * p[3]).sqrt();
        let prods = [p[0] * p[1] * p[2], p[0] * p[1] * p[3], p[0] * p[2] * p[3], p[1] * p[2] * p[3]];
        for i in 0..4 {
            let d = (fwd[i] - bwd[i]) / (2.0 * h);
            assert!((d - prods[i] / root).abs() < 1e-8, "{i}: {d}");
        }
        assert!((p[0] / p[3] - init[0] / init[3]).abs() < 1e-14);
    }
}

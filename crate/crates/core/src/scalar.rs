use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

use crate::exterior::Coefficient;

/// Floating-point scalar the geometry is computed over: `f32` or `f64`.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Coefficient<Scalar = Self>
{
    /// Absolute tolerance used for exact-arithmetic style comparisons on
    /// constant coefficients.
    const TOL: f64;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn tol() -> Self {
        Self::lit(Self::TOL)
    }
}

impl Real for f64 {
    const TOL: f64 = 1e-12;
}

impl Real for f32 {
    const TOL: f64 = 1e-5;
}

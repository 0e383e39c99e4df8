use std::fmt::Debug;

use crate::scalar::Real;

/// Coefficient ring for forms: real constants, or periodic fields that also
/// carry partial derivatives along the base coordinates.
pub trait Coefficient: Clone + Debug + Send + Sync {
    type Scalar: Real;

    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    fn times(&self, rhs: &Self) -> Self;
    fn negate(&self) -> Self;
    fn scale(&self, s: Self::Scalar) -> Self;
    /// Pointwise application of a scalar function.
    fn map(&self, f: impl Fn(Self::Scalar) -> Self::Scalar) -> Self;
    /// `∂/∂x^axis`, or `None` when the derivative is identically zero.
    fn partial(&self, axis: usize) -> Option<Self>;
    /// Sup norm.
    fn max_abs(&self) -> Self::Scalar;

    fn is_negligible(&self, tol: Self::Scalar) -> bool {
        self.max_abs() <= tol
    }
}

macro_rules! impl_scalar_coefficient {
    ($($t:ty),*) => {$(
        impl Coefficient for $t {
            type Scalar = $t;
            #[inline]
            fn plus(&self, rhs: &Self) -> Self { self + rhs }
            #[inline]
            fn minus(&self, rhs: &Self) -> Self { self - rhs }
            #[inline]
            fn times(&self, rhs: &Self) -> Self { self * rhs }
            #[inline]
            fn negate(&self) -> Self { -self }
            #[inline]
            fn scale(&self, s: $t) -> Self { self * s }
            #[inline]
            fn map(&self, f: impl Fn($t) -> $t) -> Self { f(*self) }
            #[inline]
            fn partial(&self, _axis: usize) -> Option<Self> { None }
            #[inline]
            fn max_abs(&self) -> $t { self.abs() }
        }
    )*};
}

impl_scalar_coefficient!(f32, f64);

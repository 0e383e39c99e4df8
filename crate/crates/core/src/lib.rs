//! Symplectic geometric flows of positive 3-forms.
//!
//! The flow family `∂_t φ = d Λ_ω d(w(|φ|²) φ̂)` (Hitchin gradient, Type IIA,
//! dual Ricci and ε-regularized weights) on invariant Lie-algebra frames,
//! the stable-form constructions behind it, curvature and Nijenhuis
//! diagnostics, principal-symbol spectra, and semi-flat T-duality checks on
//! periodic Hessian metrics over `T³`.
//!
//! Everything is generic over the scalar type ([`Real`]: `f32` or `f64`);
//! the `*64` aliases below fix `f64`.

pub mod curvature;
pub mod error;
pub mod exterior;
pub mod flows;
pub mod hitchin;
pub mod homogeneous;
pub mod scalar;
pub mod semiflat;
pub mod symbol;
pub mod verify;

pub use scalar::Real;

pub type Form64 = exterior::Form<f64>;
pub type Frame64 = exterior::Frame<f64>;
pub type TypeIIAStructure64 = hitchin::TypeIIAStructure<f64>;
pub type LieFrame64 = homogeneous::LieFrame<f64>;
pub type Ansatz64 = homogeneous::Ansatz<f64>;
pub type MetricLieFrame64 = curvature::MetricLieFrame<f64>;
pub type FlowSpec64 = flows::FlowSpec<f64>;
pub type Trajectory64 = flows::Trajectory<f64>;
pub type GridField64 = semiflat::GridField<f64>;
pub type HessianMetricField64 = semiflat::HessianMetricField<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

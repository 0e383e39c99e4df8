//! Exterior calculus on a 6-dimensional coframe.

mod form;
mod frame;
mod ring;

pub use form::{checked_inverse_metric, minor_det, Blade, Form, DIM};
pub use frame::{standard_omega, symplectic_volume, two_form_matrix, Frame};
pub use ring::Coefficient;

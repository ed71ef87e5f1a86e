//! Numerical laboratory for linearized stability of quasilinear parabolic
//! problems `u' = A(u)u + f(u)` at non-isolated equilibria.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmcf;
pub mod heleshaw;
pub mod lab;
pub mod manifold;
pub mod quadrature;
pub mod rd;
pub mod regression;
pub mod spectral;

pub use error::{Error, Result};

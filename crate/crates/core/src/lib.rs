//! Numerical harmonic analysis on the Laguerre hypergroup K = [0, inf) x R.
//!
//! The crate provides the special functions behind the characters, quadrature on
//! K and on its dual, the forward and inverse Fourier-Laguerre transform,
//! generalized translation and convolution, H^p atoms with molecule norms, and
//! Fourier multipliers with their Mihlin and Hormander checks.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod error;
pub mod geometry;
pub mod hyperops;
pub mod multipliers;
pub mod point;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod specfun;
pub mod transform;

pub use error::{LhkError, Result};
pub use point::{DualPoint, HypergroupPoint, Params};

//! Product dyadic grids, rectangular weights and rectangular fractional
//! integrals, with exhaustive finite-family checks of their structural
//! constants.
//!
//! Numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common case.

pub mod conditions;
pub mod dyadic;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod operators;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Weight64 = measures::Weight<f64>;
pub type Weight32 = measures::Weight<f32>;
pub type GridFunction64 = measures::GridFunction<f64>;
pub type GridFunction32 = measures::GridFunction<f32>;
pub type Measure64 = measures::Measure<f64>;
pub type Kernel64 = operators::Kernel<f64>;
pub type Kernel32 = operators::Kernel<f32>;
pub type NormEstimate64 = estimators::NormEstimate<f64>;

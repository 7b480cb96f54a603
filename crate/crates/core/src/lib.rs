//! Core numerics for low-rank quantum state tomography with reduced
//! measurement settings.
//!
//! The crate models the multi-ion tomography pipeline: density matrices and
//! their local rank-`r` parametrization ([`states`]), measurement designs
//! with outcome probabilities and analytic gradients ([`designs`]), classical
//! and quantum Fisher-information functionals together with the asymptotic
//! mean-squared-error and concentration machinery ([`fisher`]), seeded
//! synthetic counts ([`sampling`]), and the rank-truncated iterative RρR
//! maximum-likelihood estimator ([`mle`]).
//!
//! Everything here is `no_std`-compatible (with `alloc`); IO, file formats
//! and the experiment driver live in the companion CLI crate. All operations
//! are pure functions over immutable values, and every random construction
//! is deterministic in an explicit `u64` seed.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod designs;
pub mod error;
pub mod fisher;
pub mod mle;
pub mod params;
pub mod rng;
pub mod sampling;
pub mod states;

mod linalg;
mod scalar;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Complex64 = num_complex::Complex<f64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dynamically sized complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dynamically sized real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dynamically sized real column vector.
pub type RVector = nalgebra::DVector<f64>;

//! Nonlinear potential theory at desk scale: n-Laplace Dirichlet solves with
//! measure data, Wolff potentials, conformal capacity of condensers, the
//! dyadic thinness series, blow-down asymptotics around an isolated
//! singularity, an exponential-integrability harness for the Wolff potential,
//! and two geometric applications (conformally flat metrics and hypersurface
//! graphs in hyperbolic space).
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded or sandboxed use. All types are immutable after
//! construction and operations are pure functions, so values can be shared
//! freely across threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod annuli;
pub mod asymptotics;
pub mod capacity;
pub mod error;
pub mod expint;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod math;
pub mod measure;
pub mod nlaplace;
pub mod thinness;
pub mod wolff;

mod solver;

pub use error::{Error, Result};
pub use field::{fn_field, gradient, Field, FnField, ScalarField, VectorField};
pub use grid::{Grid, Region};
pub use measure::RadonMeasure;

//! Spectral analysis of the one-dimensional linearized BGK equation whose
//! collision frequency depends affinely on molecular speed,
//! `nu(C) = 1 + a|C|`.
//!
//! The crate builds the model constants from the conservation laws
//! ([`params`]), evaluates the Cauchy-type moment integrals of the weight
//! ([`moments`]), assembles the 3x3 dispersion matrix and its determinant
//! ([`dispersion`]), constructs discrete and continuum eigensolutions and the
//! general-solution expansion ([`spectrum`]), and provides the two exactly
//! solvable limits ([`limits`]): constant frequency (`a = 0`) and frequency
//! proportional to speed (`a -> inf`). [`cli`] is the front end behind the
//! `bgk-affine` binary.

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod limits;
pub mod params;
pub mod moments;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{GasParams, VelocityMap};
pub use quadrature::{GaussLegendre, QuadratureScheme};

//! Numerics for Schrödinger equations with time-degenerate dispersion
//! `i∂_t u + g'(t)Δu = N(u)` on flat tori.
//!
//! * [`spectral`]: grids, FFT transforms, Sobolev and Lebesgue norms.
//! * [`warp`]: time warps `g`, the modified time transform, linear flows.
//! * [`xsb`]: space-time fields and Bourgain-type norms.
//! * [`gauge`]: reduction of `i∂_t u + ∂_x(a ∂_x u)` to constant coefficients.
//! * [`solver`]: split-step and Picard solvers.
//! * [`lab`]: numerical experiments on Strichartz-type estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauge;
pub mod lab;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod warp;
pub mod xsb;

pub use error::{Error, Result};
pub use gauge::{build_reduction, CoefficientFunction, Reduction};
pub use solver::{
    exact_plane_wave, picard_duhamel, split_step, ProblemSpec, SolveConfig, TimeCoefficient,
};
pub use spectral::{FourierField, Mode, TorusGrid};
pub use warp::{TauGrid, TimeGrid, TimeWarp};
pub use xsb::SpaceTimeField;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

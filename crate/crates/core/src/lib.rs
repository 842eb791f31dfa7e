//! tvgeo-core: total-variation denoising on a pixel grid, dual
//! certificates, and the level-set geometry used to check support stability
//! of TV solutions against closed-form oracles.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel experiment drivers live in the `tvgeo` crate.
//!
//! Modules, bottom-up:
//! - [`grid`]: images, dual fields, the 4-fold gradient and its adjoint.
//! - [`solver`]: dual projected gradient for the ROF problem, energies, gap.
//! - [`analytic`]: shapes, openings, Cheeger radii, closed-form certificates,
//!   disc and outer calibrations, rasterization.
//! - [`geometry`]: level sets, contours, Jordan decomposition, distances,
//!   tubes, density ratios, set energies.
//! - [`certify`]: certificate sweeps, saturation maps, stability experiments
//!   and the Burger-Osher diagnostic.

#![no_std]
// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytic;
pub mod certify;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod noise;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{divergence4, gradient4, operator_norm_sq, DualField, GridImage};

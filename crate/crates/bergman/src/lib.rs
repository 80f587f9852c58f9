//! Numerical laboratory for radially weighted Bergman spaces A²_w on the
//! unit disk: dyadic radii schedules, the discretized norm and its
//! reproducing kernel, Carleson-constant scans for discrete measures,
//! upper/lower densities of point sequences, the peak-function
//! construction by balayage and atomization, and finite-dimensional
//! interpolation/sampling certificates.

pub mod carleson;
pub mod certify;
pub mod cli;
pub mod construction;
pub mod densities;
pub mod error;
pub mod geometry;
pub mod space;
pub mod weights;

pub use error::{Error, Result};

/// log 2 / 2, the density threshold separating interpolation from sampling.
pub const HALF_LOG2: f64 = core::f64::consts::LN_2 / 2.0;

/// Golden-angle increment used for deterministic per-circle phase offsets.
pub const GOLDEN_ANGLE: f64 = 2.399963229728653;

//! Analysis of implicit, time-invariant max-min-plus-scaling (MMPS) systems.
//!
//! The pipeline runs from a system in ABCD canonical form through
//! solvability, growth rates and fixed-point sets, normalization,
//! linearization around a fixed point and a spectral stability verdict.
//! [`railway`] builds the urban railway line model used throughout the tests.

pub mod error;
pub mod fixed_points;
pub mod format;
pub mod growth;
pub mod linalg;
pub mod linearization;
pub mod lp;
pub mod model;
pub mod normalization;
pub mod railway;
pub mod report;
pub mod simulator;
pub mod solvability;
pub mod stability;
pub mod tropical;

pub use error::{MmpsError, Result};
pub use model::{Kind, MmpsSystem};
pub use tropical::{ExtReal, TropMatrix};

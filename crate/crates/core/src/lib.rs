//! A data-assimilation testbed built around chaotic convection-loop models.
//!
//! The crate provides the filter ladder from scalar analysis through the
//! 4D local ensemble transform Kalman filter, the Lorenz 63 and
//! Ehrhard-Muller forecast models with exact tangent linear models, loop
//! geometry with slice and radius covariance localization, synthetic
//! observation generation, and the twin-experiment protocols (window
//! sweeps, inflation sweeps, observation-density sweeps) used to score
//! them.

pub mod assimilation;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod localization;
pub mod models;
pub mod observations;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

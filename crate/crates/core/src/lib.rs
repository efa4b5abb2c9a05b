//! Variable Planck's-constant field models.
//!
//! A classical scalar field ħ(x, t) rescales the action in each particle's
//! phase. The dominant path then obeys a modified Euler–Lagrange equation in
//! which the log-gradient of ħ acts as a velocity-dependent force. This crate
//! provides the field profiles, their observational calibration, trajectory
//! and binary-orbit integrators, the galaxy rotation-curve inversion, the
//! averaged cosmological expansion, and the coupled ħ–particle wave system.

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod constants;
pub mod cosmo;
pub mod coupled;
pub mod dynamics;
pub mod error;
pub mod galaxy;
pub mod golden;
pub mod ode;
pub mod orbits;
pub mod profiles;
pub mod vector;

pub use error::{Error, Result};
pub use profiles::{HbarProfile, StandingWaveProfile};
pub use vector::Vec3;

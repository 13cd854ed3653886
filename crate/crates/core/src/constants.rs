//! Physical constants in SI units.
//!
//! Exact values from the 2019 SI redefinition (CODATA 2018 listing).

use std::f64::consts::PI;

/// Planck constant h (J s), exact.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant hbar = h / 2 pi (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);

/// Boltzmann constant k_B (J / K), exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum c (m / s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

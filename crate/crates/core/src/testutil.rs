//! Shared fixtures for unit tests.

use crate::params::RawParams;
use std::f64::consts::PI;

/// Reference pendular-cavity numbers used across the test suite:
/// 10 mg mirror at 26 kHz, 1 cm cavity, finesse 15000, 1064 nm pump.
/// The mechanical quality factor is 4e6 at 4.2 K and 2.25e6 at 70 K.
pub fn reference_device(laser_power_w: f64, temperature_k: f64) -> RawParams {
    RawParams {
        mirror_mass_kg: 1e-5,
        mirror_angular_frequency: 2.0 * PI * 26e3,
        quality_factor: if temperature_k > 40.0 { 2.25e6 } else { 4e6 },
        cavity_length_m: 0.01,
        finesse: 1.5e4,
        wavelength_m: 1.064e-6,
        laser_power_w,
        temperature_k,
        detuning: 0.0,
    }
}

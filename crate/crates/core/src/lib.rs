//! Positive-P phase-space simulation of a pendular cavity: a coherently
//! pumped Fabry-Perot cavity whose end mirror is a damped harmonic
//! oscillator driven by radiation pressure.
//!
//! The crate is organised bottom-up:
//!
//! - [`constants`]: SI constants used everywhere else
//! - [`params`]: device description and derived physical quantities
//! - [`classical`]: mean-field dynamics, steady states and bistability
//! - [`sde`]: exact stochastic equations of motion in the doubled phase space
//! - [`accumulator`]: mergeable moment sums recorded along trajectories
//! - [`ensemble`]: deterministic, partition-independent trajectory ensembles
//! - [`observables`]: measurement statistics estimated from moment sums
//!
//! All quantities are SI throughout; angular frequencies are rad/s.

pub mod accumulator;
pub mod classical;
pub mod constants;
pub mod ensemble;
pub mod error;
pub mod observables;
pub mod params;
pub mod sde;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::CoreError;

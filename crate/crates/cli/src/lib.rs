//! Command-line front end for the pendular-cavity simulator.
//!
//! [`config`] parses sectioned key-value experiment descriptions,
//! [`presets`] ships named configurations for the reference device,
//! [`experiments`] validates and executes them, and [`output`] defines
//! the CSV and manifest formats. The `pendular` binary wires these to a
//! `run` / `validate` / `presets` command set.

pub mod config;
pub mod experiments;
pub mod output;
pub mod presets;

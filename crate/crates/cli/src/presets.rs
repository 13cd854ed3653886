//! Named built-in configurations for the reference pendular-cavity device.
//!
//! The device block describes a reference suspended-mirror design:
//! a 10 mg mirror at 26 kHz, a 1 cm cavity of finesse 15000 pumped at
//! 1064 nm. Three studies are shipped, each in a desk-scale form (10^4
//! trajectories, the plain name) and a full-scale form (6.71x10^5
//! trajectories, `_full` suffix):
//!
//! - `cavity_4k_5mw`: pumped dynamics at 5 mW, 4.2 K.
//! - `cavity_4k_100mw`: pumped dynamics at 100 mW, 4.2 K.
//! - `cavity_70k`: unpumped relaxation at 70 K, where the mirror
//!   quality factor is 2.25x10^6 instead of 4x10^6.
//!
//! A run or validate target of the form `preset:NAME` resolves to the
//! preset's config text; anything else is read as a file path.

use crate::config::parse_experiment;
use crate::experiments::Experiment;
use anyhow::{bail, Context, Result};

pub const PRESET_NAMES: [&str; 6] = [
    "cavity_4k_5mw",
    "cavity_4k_5mw_full",
    "cavity_4k_100mw",
    "cavity_4k_100mw_full",
    "cavity_70k",
    "cavity_70k_full",
];

const FULL_SCALE_TRAJECTORIES: u64 = 671_000;
const DESK_SCALE_TRAJECTORIES: u64 = 10_000;

fn device_block(laser_power_w: &str, temperature_k: &str, quality_factor: &str) -> String {
    format!(
        "[device]\n\
         mirror_mass_kg = 1e-5\n\
         mirror_frequency_hz = 26e3\n\
         quality_factor = {quality_factor}\n\
         cavity_length_m = 0.01\n\
         finesse = 1.5e4\n\
         wavelength_m = 1.064e-6\n\
         laser_power_w = {laser_power_w}\n\
         temperature_k = {temperature_k}\n"
    )
}

fn ensemble_block(trajectories: u64) -> String {
    format!(
        "[ensemble]\n\
         trajectories = {trajectories}\n\
         t_end_s = 1.946025e-4   # just above five mirror periods\n\
         dt_s = 3.1e-9           # cavity decay resolved: gamma dt below 0.01\n\
         record_stride = 775     # sixteen records per mirror period\n\
         base_seed = 1\n\
         initial_state = thermal\n"
    )
}

fn pumped_preset(power: &str, trajectories: u64) -> String {
    format!(
        "[experiment]\nkind = pumped_dynamics\n\n{}\n{}",
        device_block(power, "4.2", "4e6"),
        ensemble_block(trajectories)
    )
}

fn relaxation_preset(trajectories: u64) -> String {
    format!(
        "[experiment]\nkind = unpumped_relaxation\n\n{}\n{}\n[relaxation]\ntemperatures_k = 70\n",
        device_block("0", "70", "2.25e6"),
        ensemble_block(trajectories)
    )
}

/// Config text for a named preset.
pub fn preset_text(name: &str) -> Option<String> {
    match name {
        "cavity_4k_5mw" => Some(pumped_preset("5e-3", DESK_SCALE_TRAJECTORIES)),
        "cavity_4k_5mw_full" => Some(pumped_preset("5e-3", FULL_SCALE_TRAJECTORIES)),
        "cavity_4k_100mw" => Some(pumped_preset("0.1", DESK_SCALE_TRAJECTORIES)),
        "cavity_4k_100mw_full" => Some(pumped_preset("0.1", FULL_SCALE_TRAJECTORIES)),
        "cavity_70k" => Some(relaxation_preset(DESK_SCALE_TRAJECTORIES)),
        "cavity_70k_full" => Some(relaxation_preset(FULL_SCALE_TRAJECTORIES)),
        _ => None,
    }
}

/// Resolves a run or validate target into an experiment plus a short
/// label used for the default output directory.
pub fn load_target(target: &str) -> Result<(Experiment, String)> {
    if let Some(name) = target.strip_prefix("preset:") {
        let Some(text) = preset_text(name) else {
            bail!(
                "unknown preset {name:?}; available: {}",
                PRESET_NAMES.join(", ")
            );
        };
        let exp = parse_experiment(&text)
            .with_context(|| format!("parsing preset {name}"))?;
        return Ok((exp, name.to_string()));
    }
    let text = std::fs::read_to_string(target)
        .with_context(|| format!("reading config {target}"))?;
    let exp =
        parse_experiment(&text).with_context(|| format!("parsing config {target}"))?;
    let label = std::path::Path::new(target)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    Ok((exp, label))
}

//! Sectioned key-value configuration files.
//!
//! The format is deliberately small: `[section]` headers, `key = value`
//! pairs, `#` comments (full-line or trailing), blank lines ignored. Keys
//! carry explicit unit suffixes (`mirror_mass_kg`, `dt_s`) so a reader can
//! audit units without consulting documentation. Unknown sections or keys
//! are errors, as are duplicates; every value the physics layer would
//! reject is rejected here before any computation starts.

use crate::experiments::{
    CheckSettings, EnsembleSettings, Experiment, ExperimentKind, ScanSettings,
};
use anyhow::{bail, Context, Result};
use pendular_core::params::RawParams;
use pendular_core::sde::InitialState;
use std::f64::consts::TAU;
use std::path::PathBuf;

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                bail!("line {line_no}: unterminated section header {line:?}");
            };
            let name = name.trim();
            if name.is_empty() {
                bail!("line {line_no}: empty section name");
            }
            if sections.iter().any(|s| s.name == name) {
                bail!("line {line_no}: duplicate section [{name}]");
            }
            sections.push(Section {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {line_no}: expected `key = value`, got {line:?}");
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            bail!("line {line_no}: empty key");
        }
        let Some(section) = sections.last_mut() else {
            bail!("line {line_no}: key {key:?} appears before any [section]");
        };
        if section.entries.iter().any(|e| e.key == key) {
            bail!(
                "line {line_no}: duplicate key {key:?} in section [{}]",
                section.name
            );
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: line_no,
        });
    }
    Ok(sections)
}

fn parse_f64(entry: &Entry) -> Result<f64> {
    entry.value.parse::<f64>().with_context(|| {
        format!(
            "line {}: key {:?}: {:?} is not a number",
            entry.line, entry.key, entry.value
        )
    })
}

fn parse_usize(entry: &Entry) -> Result<usize> {
    entry.value.parse::<usize>().with_context(|| {
        format!(
            "line {}: key {:?}: {:?} is not a non-negative integer",
            entry.line, entry.key, entry.value
        )
    })
}

fn parse_u64(entry: &Entry) -> Result<u64> {
    entry.value.parse::<u64>().with_context(|| {
        format!(
            "line {}: key {:?}: {:?} is not a non-negative integer",
            entry.line, entry.key, entry.value
        )
    })
}

fn parse_f64_list(entry: &Entry) -> Result<Vec<f64>> {
    entry
        .value
        .split(',')
        .map(|item| {
            item.trim().parse::<f64>().with_context(|| {
                format!(
                    "line {}: key {:?}: {:?} is not a number",
                    entry.line, entry.key, item.trim()
                )
            })
        })
        .collect()
}

fn parse_initial_state(entry: &Entry) -> Result<InitialState> {
    match entry.value.as_str() {
        "vacuum" => Ok(InitialState::Vacuum),
        "coherent" => Ok(InitialState::CoherentMirror),
        "thermal" => Ok(InitialState::ThermalMirror),
        other => bail!(
            "line {}: initial_state must be vacuum, coherent or thermal, got {other:?}",
            entry.line
        ),
    }
}

fn parse_kind(entry: &Entry) -> Result<ExperimentKind> {
    ExperimentKind::from_name(&entry.value).with_context(|| {
        format!(
            "line {}: unknown experiment kind {:?} (expected one of {})",
            entry.line,
            entry.value,
            ExperimentKind::NAMES.join(", ")
        )
    })
}

/// Name used for the initial state in configs and file names.
pub fn initial_state_name(state: InitialState) -> &'static str {
    match state {
        InitialState::Vacuum => "vacuum",
        InitialState::CoherentMirror => "coherent",
        InitialState::ThermalMirror => "thermal",
    }
}

/// Parses a complete experiment description from config text.
pub fn parse_experiment(text: &str) -> Result<Experiment> {
    let sections = parse_sections(text)?;

    let mut kind: Option<ExperimentKind> = None;
    let mut output_dir: Option<PathBuf> = None;
    let mut device: Option<RawParams> = None;
    let mut ensemble = EnsembleSettings::default();
    let mut workers = 0usize;
    let mut relaxation_temperatures_k: Option<Vec<f64>> = None;
    let mut scan = ScanSettings::default();
    let mut check = CheckSettings::default();

    for section in &sections {
        match section.name.as_str() {
            "experiment" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "kind" => kind = Some(parse_kind(e)?),
                        "output_dir" => output_dir = Some(PathBuf::from(&e.value)),
                        other => bail!(
                            "line {}: unknown key {other:?} in [experiment]",
                            e.line
                        ),
                    }
                }
            }
            "device" => {
                let mut mass = None;
                let mut freq_hz = None;
                let mut q = None;
                let mut length = None;
                let mut finesse = None;
                let mut wavelength = None;
                let mut power = None;
                let mut temperature = None;
                let mut detuning = 0.0;
                for e in &section.entries {
                    match e.key.as_str() {
                        "mirror_mass_kg" => mass = Some(parse_f64(e)?),
                        "mirror_frequency_hz" => freq_hz = Some(parse_f64(e)?),
                        "quality_factor" => q = Some(parse_f64(e)?),
                        "cavity_length_m" => length = Some(parse_f64(e)?),
                        "finesse" => finesse = Some(parse_f64(e)?),
                        "wavelength_m" => wavelength = Some(parse_f64(e)?),
                        "laser_power_w" => power = Some(parse_f64(e)?),
                        "temperature_k" => temperature = Some(parse_f64(e)?),
                        "detuning_rad_s" => detuning = parse_f64(e)?,
                        other => {
                            bail!("line {}: unknown key {other:?} in [device]", e.line)
                        }
                    }
                }
                let missing = [
                    ("mirror_mass_kg", mass.is_none()),
                    ("mirror_frequency_hz", freq_hz.is_none()),
                    ("quality_factor", q.is_none()),
                    ("cavity_length_m", length.is_none()),
                    ("finesse", finesse.is_none()),
                    ("wavelength_m", wavelength.is_none()),
                    ("laser_power_w", power.is_none()),
                    ("temperature_k", temperature.is_none()),
                ]
                .iter()
                .filter(|(_, gone)| *gone)
                .map(|(name, _)| *name)
                .collect::<Vec<_>>();
                if !missing.is_empty() {
                    bail!(
                        "section [device] (line {}): missing required keys: {}",
                        section.line,
                        missing.join(", ")
                    );
                }
                device = Some(RawParams {
                    mirror_mass_kg: mass.unwrap(),
                    mirror_angular_frequency: TAU * freq_hz.unwrap(),
                    quality_factor: q.unwrap(),
                    cavity_length_m: length.unwrap(),
                    finesse: finesse.unwrap(),
                    wavelength_m: wavelength.unwrap(),
                    laser_power_w: power.unwrap(),
                    temperature_k: temperature.unwrap(),
                    detuning,
                });
            }
            "ensemble" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "trajectories" => ensemble.trajectories = parse_usize(e)?,
                        "t_end_s" => ensemble.t_end_s = parse_f64(e)?,
                        "dt_s" => ensemble.dt_s = parse_f64(e)?,
                        "record_stride" => ensemble.record_stride = parse_usize(e)?,
                        "base_seed" => ensemble.base_seed = parse_u64(e)?,
                        "initial_state" => {
                            ensemble.initial_state = parse_initial_state(e)?
                        }
                        "divergence_threshold" => {
                            ensemble.divergence_threshold = parse_f64(e)?
                        }
                        "corrector_iterations" => {
                            ensemble.corrector_iterations = parse_usize(e)?
                        }
                        "noise_refinement" => ensemble.noise_refinement = parse_usize(e)?,
                        "batches" => ensemble.batches = parse_usize(e)?,
                        "workers" => workers = parse_usize(e)?,
                        other => {
                            bail!("line {}: unknown key {other:?} in [ensemble]", e.line)
                        }
                    }
                }
            }
            "relaxation" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "temperatures_k" => {
                            relaxation_temperatures_k = Some(parse_f64_list(e)?)
                        }
                        other => {
                            bail!("line {}: unknown key {other:?} in [relaxation]", e.line)
                        }
                    }
                }
            }
            "scan" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "delta_min_rad_s" => scan.delta_min_rad_s = parse_f64(e)?,
                        "delta_max_rad_s" => scan.delta_max_rad_s = Some(parse_f64(e)?),
                        "delta_steps" => scan.delta_steps = parse_usize(e)?,
                        "epsilon_min_per_s" => scan.epsilon_min_per_s = parse_f64(e)?,
                        "epsilon_max_per_s" => scan.epsilon_max_per_s = parse_f64(e)?,
                        "epsilon_steps" => scan.epsilon_steps = parse_usize(e)?,
                        other => bail!("line {}: unknown key {other:?} in [scan]", e.line),
                    }
                }
            }
            "check" => {
                for e in &section.entries {
                    match e.key.as_str() {
                        "states" => check.states = parse_usize(e)?,
                        "scale" => check.scale = parse_f64(e)?,
                        other => {
                            bail!("line {}: unknown key {other:?} in [check]", e.line)
                        }
                    }
                }
            }
            other => bail!("line {}: unknown section [{other}]", section.line),
        }
    }

    let Some(kind) = kind else {
        bail!("missing [experiment] section with a `kind` key");
    };
    let Some(device) = device else {
        bail!("missing [device] section");
    };
    let relaxation_temperatures_k =
        relaxation_temperatures_k.unwrap_or_else(|| vec![device.temperature_k]);

    Ok(Experiment {
        kind,
        device,
        ensemble,
        workers,
        relaxation_temperatures_k,
        scan,
        check,
        output_dir,
    })
}

/// Serialises an experiment back into parseable config text. Only the
/// sections relevant to the experiment kind are written; the output
/// directory is intentionally omitted so an echoed config can be re-run
/// anywhere with `--out-dir`.
pub fn render_experiment(exp: &Experiment) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "[experiment]");
    let _ = writeln!(out, "kind = {}", exp.kind.name());
    let _ = writeln!(out);
    let _ = writeln!(out, "[device]");
    let d = &exp.device;
    let _ = writeln!(out, "mirror_mass_kg = {:e}", d.mirror_mass_kg);
    let _ = writeln!(
        out,
        "mirror_frequency_hz = {:e}",
        d.mirror_angular_frequency / TAU
    );
    let _ = writeln!(out, "quality_factor = {:e}", d.quality_factor);
    let _ = writeln!(out, "cavity_length_m = {:e}", d.cavity_length_m);
    let _ = writeln!(out, "finesse = {:e}", d.finesse);
    let _ = writeln!(out, "wavelength_m = {:e}", d.wavelength_m);
    let _ = writeln!(out, "laser_power_w = {:e}", d.laser_power_w);
    let _ = writeln!(out, "temperature_k = {:e}", d.temperature_k);
    let _ = writeln!(out, "detuning_rad_s = {:e}", d.detuning);
    if exp.kind.uses_ensemble() {
        let e = &exp.ensemble;
        let _ = writeln!(out);
        let _ = writeln!(out, "[ensemble]");
        let _ = writeln!(out, "trajectories = {}", e.trajectories);
        let _ = writeln!(out, "t_end_s = {:e}", e.t_end_s);
        let _ = writeln!(out, "dt_s = {:e}", e.dt_s);
        let _ = writeln!(out, "record_stride = {}", e.record_stride);
        let _ = writeln!(out, "base_seed = {}", e.base_seed);
        let _ = writeln!(
            out,
            "initial_state = {}",
            initial_state_name(e.initial_state)
        );
        let _ = writeln!(out, "divergence_threshold = {:e}", e.divergence_threshold);
        let _ = writeln!(out, "corrector_iterations = {}", e.corrector_iterations);
        let _ = writeln!(out, "noise_refinement = {}", e.noise_refinement);
        let _ = writeln!(out, "batches = {}", e.batches);
        let _ = writeln!(out, "workers = {}", exp.workers);
    }
    if exp.kind == ExperimentKind::UnpumpedRelaxation {
        let _ = writeln!(out);
        let _ = writeln!(out, "[relaxation]");
        let temps: Vec<String> = exp
            .relaxation_temperatures_k
            .iter()
            .map(|t| format!("{t:e}"))
            .collect();
        let _ = writeln!(out, "temperatures_k = {}", temps.join(", "));
    }
    if exp.kind == ExperimentKind::BistabilityScan {
        let s = &exp.scan;
        let _ = writeln!(out);
        let _ = writeln!(out, "[scan]");
        let _ = writeln!(out, "delta_min_rad_s = {:e}", s.delta_min_rad_s);
        if let Some(max) = s.delta_max_rad_s {
            let _ = writeln!(out, "delta_max_rad_s = {max:e}");
        }
        let _ = writeln!(out, "delta_steps = {}", s.delta_steps);
        let _ = writeln!(out, "epsilon_min_per_s = {:e}", s.epsilon_min_per_s);
        let _ = writeln!(out, "epsilon_max_per_s = {:e}", s.epsilon_max_per_s);
        let _ = writeln!(out, "epsilon_steps = {}", s.epsilon_steps);
    }
    if matches!(
        exp.kind,
        ExperimentKind::PsdCheck | ExperimentKind::FactorizationCheck
    ) {
        let c = &exp.check;
        let _ = writeln!(out);
        let _ = writeln!(out, "[check]");
        let _ = writeln!(out, "states = {}", c.states);
        let _ = writeln!(out, "scale = {:e}", c.scale);
    }
    out
}

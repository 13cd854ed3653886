//! Experiment kinds, validation, and execution.
//!
//! Each kind maps one study onto files in the output directory: ensemble
//! time series (`series*.csv`), their classical mean-field companion
//! (`classical.csv`), steady-state scans (`bistability.csv`), and the
//! noise-matrix probes (`psd.csv`, `factorization.csv`). Every run also
//! writes `config_echo.cfg` (a re-runnable copy of the effective
//! configuration) and `manifest.txt` with derived parameters, counters
//! and SHA-256 checksums of every emitted file.

use crate::config::{initial_state_name, render_experiment};
use crate::output::{
    file_sha256, series_table, write_manifest, write_table, Table,
};
use anyhow::{ensure, Context, Result};
use pendular_core::classical::{
    bistability_analysis, bistable_pump_window, integrate_classical,
    steady_state_iterative, ClassicalState,
};
use pendular_core::ensemble::{run_ensemble, EnsembleConfig, EnsembleRun};
use pendular_core::observables::{series as observable_series, ObservableSeries};
use pendular_core::params::{derive_params, PhysicalParams, RawParams};
use pendular_core::sde::{
    factorization_residual, is_diffusion_psd, probe_states, InitialState,
    PhaseSpaceState, SdeCoefficients, DEFAULT_CORRECTOR_ITERATIONS,
    DEFAULT_DIVERGENCE_THRESHOLD,
};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// The study a configuration describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    UnpumpedRelaxation,
    PumpedDynamics,
    BistabilityScan,
    Inference,
    PsdCheck,
    FactorizationCheck,
}

impl ExperimentKind {
    pub const NAMES: [&'static str; 6] = [
        "unpumped_relaxation",
        "pumped_dynamics",
        "bistability_scan",
        "inference",
        "psd_check",
        "factorization_check",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::UnpumpedRelaxation => "unpumped_relaxation",
            Self::PumpedDynamics => "pumped_dynamics",
            Self::BistabilityScan => "bistability_scan",
            Self::Inference => "inference",
            Self::PsdCheck => "psd_check",
            Self::FactorizationCheck => "factorization_check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "unpumped_relaxation" => Some(Self::UnpumpedRelaxation),
            "pumped_dynamics" => Some(Self::PumpedDynamics),
            "bistability_scan" => Some(Self::BistabilityScan),
            "inference" => Some(Self::Inference),
            "psd_check" => Some(Self::PsdCheck),
            "factorization_check" => Some(Self::FactorizationCheck),
            _ => None,
        }
    }

    /// Whether the kind propagates stochastic trajectories.
    pub fn uses_ensemble(&self) -> bool {
        matches!(
            self,
            Self::UnpumpedRelaxation | Self::PumpedDynamics | Self::Inference
        )
    }
}

/// Trajectory-ensemble settings shared by the stochastic experiment kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSettings {
    pub trajectories: usize,
    pub t_end_s: f64,
    pub dt_s: f64,
    pub record_stride: usize,
    pub base_seed: u64,
    pub initial_state: InitialState,
    pub divergence_threshold: f64,
    pub corrector_iterations: usize,
    pub noise_refinement: usize,
    pub batches: usize,
}

impl Default for EnsembleSettings {
    /// Desk-scale defaults: 10^4 trajectories over just above five mirror
    /// periods of the reference device, sixteen records per period.
    fn default() -> Self {
        Self {
            trajectories: 10_000,
            t_end_s: 1.946025e-4,
            dt_s: 3.1e-9,
            record_stride: 775,
            base_seed: 1,
            initial_state: InitialState::ThermalMirror,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            corrector_iterations: DEFAULT_CORRECTOR_ITERATIONS,
            noise_refinement: 1,
            batches: 16,
        }
    }
}

impl EnsembleSettings {
    /// Ensemble configuration at the device's own power, temperature and
    /// detuning.
    pub fn to_config(&self, device: &RawParams) -> EnsembleConfig {
        EnsembleConfig {
            n_trajectories: self.trajectories,
            t_end_s: self.t_end_s,
            dt_s: self.dt_s,
            record_stride: self.record_stride,
            base_seed: self.base_seed,
            initial_state: self.initial_state,
            laser_power_w: device.laser_power_w,
            temperature_k: device.temperature_k,
            detuning: device.detuning,
            divergence_threshold: self.divergence_threshold,
            corrector_iterations: self.corrector_iterations,
            noise_refinement: self.noise_refinement,
            n_batches: self.batches,
        }
    }
}

/// Grid settings for the steady-state bistability scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub delta_min_rad_s: f64,
    /// Defaults to three cavity linewidths when absent.
    pub delta_max_rad_s: Option<f64>,
    pub delta_steps: usize,
    pub epsilon_min_per_s: f64,
    pub epsilon_max_per_s: f64,
    pub epsilon_steps: usize,
}

impl Default for ScanSettings {
    /// Twenty detunings from zero to three linewidths, twenty pump
    /// amplitudes over four decades.
    fn default() -> Self {
        Self {
            delta_min_rad_s: 0.0,
            delta_max_rad_s: None,
            delta_steps: 20,
            epsilon_min_per_s: 2.9e9,
            epsilon_max_per_s: 2.9e13,
            epsilon_steps: 20,
        }
    }
}

/// Settings for the state-probe experiment kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSettings {
    pub states: usize,
    pub scale: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            states: 1000,
            scale: 1e4,
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub device: RawParams,
    pub ensemble: EnsembleSettings,
    pub workers: usize,
    pub relaxation_temperatures_k: Vec<f64>,
    pub scan: ScanSettings,
    pub check: CheckSettings,
    pub output_dir: Option<PathBuf>,
}

/// Result of validating an experiment without running it.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Parameters derived at the device's own settings.
    pub params: PhysicalParams,
}

/// Checks everything the physics layer would reject, without starting any
/// computation.
pub fn validate(exp: &Experiment) -> Result<ValidationReport> {
    let params = derive_params(&exp.device).context("deriving device parameters")?;
    match exp.kind {
        ExperimentKind::PumpedDynamics | ExperimentKind::Inference => {
            exp.ensemble
                .to_config(&exp.device)
                .prepare(&exp.device)
                .context("validating ensemble settings")?;
        }
        ExperimentKind::UnpumpedRelaxation => {
            ensure!(
                !exp.relaxation_temperatures_k.is_empty(),
                "relaxation needs at least one temperature"
            );
            let mut seen = exp.relaxation_temperatures_k.clone();
            seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
            seen.dedup();
            ensure!(
                seen.len() == exp.relaxation_temperatures_k.len(),
                "relaxation temperature list contains duplicates"
            );
            for &temp in &exp.relaxation_temperatures_k {
                let mut config = exp.ensemble.to_config(&exp.device);
                config.laser_power_w = 0.0;
                config.temperature_k = temp;
                config
                    .prepare(&exp.device)
                    .with_context(|| format!("validating relaxation at {temp} K"))?;
            }
        }
        ExperimentKind::BistabilityScan => {
            let s = &exp.scan;
            ensure!(s.delta_steps >= 1, "delta_steps must be at least 1");
            ensure!(s.epsilon_steps >= 1, "epsilon_steps must be at least 1");
            ensure!(
                s.delta_min_rad_s >= 0.0,
                "delta_min_rad_s must be non-negative"
            );
            if let Some(max) = s.delta_max_rad_s {
                ensure!(
                    max >= s.delta_min_rad_s,
                    "delta_max_rad_s must not be below delta_min_rad_s"
                );
            }
            ensure!(
                s.epsilon_min_per_s > 0.0 && s.epsilon_max_per_s >= s.epsilon_min_per_s,
                "epsilon range must be positive and ascending"
            );
        }
        ExperimentKind::PsdCheck | ExperimentKind::FactorizationCheck => {
            ensure!(exp.check.states >= 1, "check needs at least one state");
            ensure!(
                exp.check.scale > 0.0 && exp.check.scale.is_finite(),
                "check scale must be positive"
            );
        }
    }
    Ok(ValidationReport { params })
}

/// Outcome of an executed experiment.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    /// Emitted file names, manifest last.
    pub files: Vec<String>,
    /// Key-value pairs echoed to the manifest and to stdout.
    pub notes: Vec<(String, String)>,
    /// True when any ensemble exceeded the divergence budget.
    pub degraded: bool,
}

fn params_notes(params: &PhysicalParams) -> Vec<(String, String)> {
    let fmt = |v: f64| format!("{v:.6e}");
    vec![
        ("cavity_decay_per_s".into(), fmt(params.cavity_decay_rate)),
        (
            "optical_frequency_rad_s".into(),
            fmt(params.optical_angular_frequency),
        ),
        ("coupling_rad_s_per_m".into(), fmt(params.coupling)),
        ("pump_amplitude_per_s".into(), fmt(params.pump_amplitude)),
        (
            "mirror_damping_per_s".into(),
            fmt(params.mirror_damping_rate),
        ),
        ("position_scale_m".into(), fmt(params.position_scale_m)),
        (
            "momentum_scale_kg_m_s".into(),
            fmt(params.momentum_scale),
        ),
        (
            "thermal_de_broglie_m".into(),
            fmt(params.thermal_de_broglie_m),
        ),
        ("mean_occupation".into(), fmt(params.mean_occupation)),
    ]
}

struct Emitter {
    out_dir: PathBuf,
    files: Vec<String>,
    notes: Vec<(String, String)>,
    degraded: bool,
}

impl Emitter {
    fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
            notes: Vec::new(),
            degraded: false,
        })
    }

    fn write(&mut self, name: &str, table: &Table) -> Result<()> {
        write_table(&self.out_dir.join(name), table)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn note(&mut self, key: &str, value: String) {
        self.notes.push((key.to_string(), value));
    }

    fn note_ensemble(&mut self, label: &str, run: &EnsembleRun, series: &ObservableSeries) {
        self.note(
            &format!("{label}_trajectories"),
            run.config.n_trajectories.to_string(),
        );
        self.note(&format!("{label}_diverged"), run.diverged.to_string());
        self.note(
            &format!("{label}_hermitian_imag_max"),
            format!("{:.3e}", series.hermitian_imag_max),
        );
        if run.degraded {
            self.note(
                &format!("{label}_warning"),
                "more than 1% of trajectories diverged; results unreliable".into(),
            );
            self.degraded = true;
        }
    }
}

fn run_pumped_dynamics(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    let config = exp.ensemble.to_config(&exp.device);
    let run = run_ensemble(&config, &exp.device, exp.workers)?;
    let series = observable_series(&run);
    emitter.write("series.csv", &series_table(&series))?;
    emitter.note_ensemble("series", &run, &series);

    // Classical mean-field companion on the same time grid, from rest.
    let prepared = config.prepare(&exp.device)?;
    let classical = integrate_classical(
        ClassicalState::at_rest(),
        &prepared.params,
        config.dt_s,
        prepared.spec.n_steps,
        config.record_stride,
    )?;
    let mut table = Table::new(
        "classical",
        [
            "time_s", "alpha_im", "alpha_re", "beta_im", "beta_re", "intensity",
            "momentum_kg_m_s", "x_m",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let xs = classical.position_m(&prepared.params);
    let ps = classical.momentum(&prepared.params);
    let intensity = classical.intensity();
    for (i, state) in classical.states.iter().enumerate() {
        table.push_row(vec![
            Some(classical.times[i]),
            Some(state.alpha.im),
            Some(state.alpha.re),
            Some(state.beta.im),
            Some(state.beta.re),
            Some(intensity[i]),
            Some(ps[i]),
            Some(xs[i]),
        ]);
    }
    emitter.write("classical.csv", &table)?;
    Ok(())
}

fn run_inference(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    let config = exp.ensemble.to_config(&exp.device);
    let run = run_ensemble(&config, &exp.device, exp.workers)?;
    let series = observable_series(&run);
    let mut table = Table::new(
        "inference",
        [
            "time_s",
            "sigma_inf_x_na",
            "sigma_inf_x_na_se",
            "sigma_inf_x_xa",
            "sigma_inf_x_xa_se",
            "sigma_inf_x_ya",
            "sigma_inf_x_ya_se",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    for p in &series.points {
        table.push_row(vec![
            Some(p.time_s),
            p.sigma_inf_x_na.value,
            p.sigma_inf_x_na.se,
            p.sigma_inf_x_xa.value,
            p.sigma_inf_x_xa.se,
            p.sigma_inf_x_ya.value,
            p.sigma_inf_x_ya.se,
        ]);
    }
    emitter.write("inference.csv", &table)?;
    emitter.note_ensemble("inference", &run, &series);
    Ok(())
}

fn run_unpumped_relaxation(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    for &temp in &exp.relaxation_temperatures_k {
        for init in [InitialState::CoherentMirror, InitialState::ThermalMirror] {
            let mut config = exp.ensemble.to_config(&exp.device);
            config.laser_power_w = 0.0;
            config.temperature_k = temp;
            config.initial_state = init;
            let run = run_ensemble(&config, &exp.device, exp.workers)?;
            let series = observable_series(&run);
            let label = format!(
                "{}_{}mk",
                initial_state_name(init),
                (temp * 1000.0).round() as u64
            );
            emitter.write(&format!("series_{label}.csv"), &series_table(&series))?;
            emitter.note_ensemble(&label, &run, &series);
        }
    }
    Ok(())
}

fn run_bistability_scan(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    let base = derive_params(&exp.device)?;
    let scan = &exp.scan;
    let delta_max = scan
        .delta_max_rad_s
        .unwrap_or(3.0 * base.cavity_decay_rate);
    let deltas: Vec<f64> = if scan.delta_steps == 1 {
        vec![scan.delta_min_rad_s]
    } else {
        (0..scan.delta_steps)
            .map(|i| {
                scan.delta_min_rad_s
                    + (delta_max - scan.delta_min_rad_s) * i as f64
                        / (scan.delta_steps - 1) as f64
            })
            .collect()
    };
    let epsilons: Vec<f64> = if scan.epsilon_steps == 1 {
        vec![scan.epsilon_min_per_s]
    } else {
        let ratio = scan.epsilon_max_per_s / scan.epsilon_min_per_s;
        (0..scan.epsilon_steps)
            .map(|i| {
                scan.epsilon_min_per_s
                    * ratio.powf(i as f64 / (scan.epsilon_steps - 1) as f64)
            })
            .collect()
    };

    let mut table = Table::new(
        "bistability",
        [
            "delta_rad_s", "pump_per_s", "bistable_possible", "n_roots", "root_high",
            "root_low", "root_mid", "window_high_per_s", "window_low_per_s",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let mut three_root_cells = 0usize;
    for &delta in &deltas {
        let mut raw = exp.device;
        raw.detuning = delta;
        let at_delta = derive_params(&raw)?;
        let window = bistable_pump_window(&at_delta);
        for &eps in &epsilons {
            let report = bistability_analysis(&at_delta.with_pump_amplitude(eps));
            if report.roots.len() == 3 {
                three_root_cells += 1;
            }
            let root = |i: usize| report.roots.get(i).copied();
            table.push_row(vec![
                Some(delta),
                Some(eps),
                Some(if report.turning_points.is_some() { 1.0 } else { 0.0 }),
                Some(report.roots.len() as f64),
                root(report.roots.len().wrapping_sub(1)),
                root(0),
                if report.roots.len() == 3 { root(1) } else { None },
                window.map(|w| w.1),
                window.map(|w| w.0),
            ]);
        }
    }
    emitter.write("bistability.csv", &table)?;
    emitter.note("three_root_cells", three_root_cells.to_string());
    emitter.note(
        "threshold_detuning_rad_s",
        format!("{:.6e}", 3.0f64.sqrt() * base.cavity_decay_rate),
    );
    Ok(())
}

fn probe_and_steady_states(exp: &Experiment) -> Result<(PhysicalParams, Vec<PhaseSpaceState>)> {
    let params = derive_params(&exp.device)?;
    let steady = steady_state_iterative(&params);
    let mut states = vec![
        PhaseSpaceState::vacuum(),
        PhaseSpaceState::from_classical(steady.alpha, steady.beta.into()),
    ];
    states.extend(probe_states(
        exp.ensemble.base_seed,
        exp.check.states,
        exp.check.scale,
    ));
    Ok((params, states))
}

fn state_row(index: usize, s: &PhaseSpaceState) -> Vec<Option<f64>> {
    vec![
        Some(index as f64),
        Some(s.alpha.im),
        Some(s.alpha_plus.im),
        Some(s.alpha_plus.re),
        Some(s.alpha.re),
        Some(s.beta.im),
        Some(s.beta_plus.im),
        Some(s.beta_plus.re),
        Some(s.beta.re),
    ]
}

const STATE_COLUMNS: [&str; 9] = [
    "index", "alpha_im", "alpha_plus_im", "alpha_plus_re", "alpha_re", "beta_im",
    "beta_plus_im", "beta_plus_re", "beta_re",
];

fn run_psd_check(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    let (params, states) = probe_and_steady_states(exp)?;
    let coeffs = SdeCoefficients::new(&params);
    let mut columns: Vec<String> = STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    columns.push("min_eigenvalue".into());
    columns.push("psd".into());
    let mut table = Table::new("psd", columns);
    let mut min_overall = f64::INFINITY;
    for (i, s) in states.iter().enumerate() {
        let (psd, min_eig) = is_diffusion_psd(s, &coeffs);
        min_overall = min_overall.min(min_eig);
        let mut row = state_row(i, s);
        row.push(Some(min_eig));
        row.push(Some(if psd { 1.0 } else { 0.0 }));
        table.push_row(row);
    }
    emitter.write("psd.csv", &table)?;
    emitter.note("min_eigenvalue_overall", format!("{min_overall:.6e}"));
    Ok(())
}

fn run_factorization_check(exp: &Experiment, emitter: &mut Emitter) -> Result<()> {
    let (params, states) = probe_and_steady_states(exp)?;
    let coeffs = SdeCoefficients::new(&params);
    let mut columns: Vec<String> = STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    columns.push("residual".into());
    let mut table = Table::new("factorization", columns);
    let mut worst = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        let residual = factorization_residual(s, &coeffs);
        worst = worst.max(residual);
        let mut row = state_row(i, s);
        row.push(Some(residual));
        table.push_row(row);
    }
    emitter.write("factorization.csv", &table)?;
    emitter.note("max_residual", format!("{worst:.6e}"));
    Ok(())
}

/// Runs an experiment into `out_dir`, writing result tables, the config
/// echo, and the manifest.
pub fn execute(exp: &Experiment, out_dir: &Path) -> Result<RunSummary> {
    validate(exp)?;
    let started = Instant::now();
    let mut emitter = Emitter::new(out_dir)?;

    match exp.kind {
        ExperimentKind::PumpedDynamics => run_pumped_dynamics(exp, &mut emitter)?,
        ExperimentKind::Inference => run_inference(exp, &mut emitter)?,
        ExperimentKind::UnpumpedRelaxation => run_unpumped_relaxation(exp, &mut emitter)?,
        ExperimentKind::BistabilityScan => run_bistability_scan(exp, &mut emitter)?,
        ExperimentKind::PsdCheck => run_psd_check(exp, &mut emitter)?,
        ExperimentKind::FactorizationCheck => run_factorization_check(exp, &mut emitter)?,
    }

    let echo_name = "config_echo.cfg";
    std::fs::write(out_dir.join(echo_name), render_experiment(exp))
        .with_context(|| format!("writing {echo_name}"))?;
    emitter.files.push(echo_name.to_string());

    let params = derive_params(&exp.device)?;
    let mut entries: Vec<(String, String)> = vec![
        ("software_version".into(), env!("CARGO_PKG_VERSION").into()),
        ("experiment".into(), exp.kind.name().into()),
        ("base_seed".into(), exp.ensemble.base_seed.to_string()),
        ("workers".into(), exp.workers.to_string()),
        (
            "wall_clock_s".into(),
            format!("{:.3}", started.elapsed().as_secs_f64()),
        ),
        ("degraded".into(), emitter.degraded.to_string()),
    ];
    entries.extend(params_notes(&params));
    entries.extend(emitter.notes.clone());

    let mut checksums = Vec::new();
    for name in &emitter.files {
        checksums.push((name.clone(), file_sha256(&out_dir.join(name))?));
    }
    write_manifest(&out_dir.join("manifest.txt"), &entries, &checksums)?;
    let mut files = emitter.files;
    files.push("manifest.txt".to_string());

    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        files,
        notes: entries,
        degraded: emitter.degraded,
    })
}

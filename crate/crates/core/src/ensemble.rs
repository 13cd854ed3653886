//! Ensemble propagation with deterministic, worker-independent reductions.
//!
//! Trajectories are keyed by `(base_seed, index)` so every index owns an
//! independent random stream regardless of scheduling. Reduction follows a
//! fixed partition: trajectory `i` belongs to batch `i % n_batches`, each
//! batch accumulates its members in ascending index order, and batches are
//! merged in ascending batch order. The result is bitwise identical for
//! any worker count. Batch subtotals double as the resampling groups for
//! standard errors.
//!
//! All moment sums are taken as deviations from a reference profile: the
//! recorded monomials of trajectory index 0 (which also participates in
//! the ensemble). Subtracting a constant profile leaves every mean and
//! covariance unchanged while removing the bulk of the carrier amplitude
//! from the sums, which keeps vacuum-scale variances resolvable, and it
//! makes a zero-variance ensemble sum to exactly zero.
//!
//! A trajectory whose magnitude passes the divergence threshold is
//! dropped in full (its partial sums never touch the batch) and counted;
//! if more than one percent of trajectories diverge the run is flagged as
//! degraded.

use crate::accumulator::{MomentAccumulator, Monomials};
use crate::error::CoreError;
use crate::params::{derive_params, PhysicalParams, RawParams};
use crate::sde::{
    integrate_with_observer, trajectory_rng, InitialState, SdeCoefficients,
    TrajectorySpec, DEFAULT_CORRECTOR_ITERATIONS, DEFAULT_DIVERGENCE_THRESHOLD,
};
use rayon::prelude::*;

/// Fraction of diverged trajectories above which a run is flagged.
pub const DIVERGENCE_WARN_FRACTION: f64 = 0.01;

/// Default number of reduction batches (also the standard-error groups).
pub const DEFAULT_N_BATCHES: usize = 16;

/// Full description of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    /// Requested end time; the run uses n_steps = round(t_end / dt) steps.
    pub t_end_s: f64,
    pub dt_s: f64,
    /// Steps between recorded moments; must divide the step count.
    pub record_stride: usize,
    pub base_seed: u64,
    pub initial_state: InitialState,
    /// Laser power override applied to the device description.
    pub laser_power_w: f64,
    /// Bath temperature override applied to the device description.
    pub temperature_k: f64,
    /// Detuning override applied to the device description.
    pub detuning: f64,
    pub divergence_threshold: f64,
    pub corrector_iterations: usize,
    pub noise_refinement: usize,
    pub n_batches: usize,
}

impl EnsembleConfig {
    /// A baseline configuration; callers override fields with struct
    /// update syntax.
    pub fn new(
        n_trajectories: usize,
        t_end_s: f64,
        dt_s: f64,
        record_stride: usize,
    ) -> Self {
        Self {
            n_trajectories,
            t_end_s,
            dt_s,
            record_stride,
            base_seed: 1,
            initial_state: InitialState::ThermalMirror,
            laser_power_w: 0.005,
            temperature_k: 4.2,
            detuning: 0.0,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            corrector_iterations: DEFAULT_CORRECTOR_ITERATIONS,
            noise_refinement: 1,
            n_batches: DEFAULT_N_BATCHES,
        }
    }

    fn n_steps(&self) -> usize {
        (self.t_end_s / self.dt_s).round() as usize
    }

    /// Resolves the device description and the step-level controls,
    /// rejecting inconsistent settings.
    pub fn prepare(&self, device: &RawParams) -> Result<PreparedRun, CoreError> {
        if self.n_trajectories == 0 {
            return Err(CoreError::Config("n_trajectories must be at least 1".into()));
        }
        if !(self.t_end_s > 0.0 && self.t_end_s.is_finite()) {
            return Err(CoreError::Config(format!(
                "t_end_s must be positive, got {}",
                self.t_end_s
            )));
        }
        if self.n_batches == 0 {
            return Err(CoreError::Config("n_batches must be at least 1".into()));
        }
        let mut raw = *device;
        raw.laser_power_w = self.laser_power_w;
        raw.temperature_k = self.temperature_k;
        raw.detuning = self.detuning;
        let params = derive_params(&raw)?;
        let n_steps = self.n_steps();
        if n_steps == 0 {
            return Err(CoreError::Config(format!(
                "t_end_s {} shorter than one step dt {}",
                self.t_end_s, self.dt_s
            )));
        }
        let spec = TrajectorySpec {
            dt_s: self.dt_s,
            n_steps,
            record_stride: self.record_stride,
            corrector_iterations: self.corrector_iterations,
            noise_refinement: self.noise_refinement,
            divergence_threshold: self.divergence_threshold,
        };
        let coefficients = SdeCoefficients::new(&params);
        spec.validate(&coefficients)?;
        Ok(PreparedRun {
            params,
            coefficients,
            spec,
        })
    }
}

/// Derived quantities shared by every trajectory of a run.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub params: PhysicalParams,
    pub coefficients: SdeCoefficients,
    pub spec: TrajectorySpec,
}

/// Accumulated result of an ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    /// Recorded times, t = 0 first.
    pub times_s: Vec<f64>,
    /// Reference monomial profile (trajectory index 0).
    pub reference: Vec<Monomials>,
    /// Per-batch accumulators, indexed `[batch][record]`.
    pub batches: Vec<Vec<MomentAccumulator>>,
    /// Batches merged in ascending order, indexed `[record]`.
    pub totals: Vec<MomentAccumulator>,
    /// Trajectories excluded after crossing the divergence threshold.
    pub diverged: usize,
    /// True when more than [`DIVERGENCE_WARN_FRACTION`] diverged.
    pub degraded: bool,
    pub params: PhysicalParams,
    pub config: EnsembleConfig,
}

impl EnsembleRun {
    /// Trajectories that completed and entered the sums.
    pub fn completed(&self) -> usize {
        self.config.n_trajectories - self.diverged
    }
}

/// Runs one trajectory into `sums` (deviation monomials per record).
/// Returns false (leaving `sums` untouched at the caller's discretion)
/// when the trajectory diverges.
fn trajectory_deviations(
    index: u64,
    prepared: &PreparedRun,
    config: &EnsembleConfig,
    reference: &[Monomials],
    scratch: &mut [Monomials],
) -> bool {
    let mut rng = trajectory_rng(config.base_seed, index);
    let initial = config
        .initial_state
        .sample(prepared.coefficients.mean_occupation, &mut rng);
    let result = integrate_with_observer(
        &initial,
        &prepared.coefficients,
        &prepared.spec,
        &mut rng,
        |record, _t, state| {
            scratch[record] = Monomials::of_state(state).sub(&reference[record]);
        },
    );
    result.is_ok()
}

/// Records trajectory 0 and returns its monomial profile, which the
/// ensemble uses as the common reference. A diverged reference trajectory
/// contributes zeros from the divergence record onwards.
fn reference_profile(prepared: &PreparedRun, config: &EnsembleConfig) -> Vec<Monomials> {
    let n_records = prepared.spec.n_records();
    let mut profile = vec![Monomials::default(); n_records];
    let mut rng = trajectory_rng(config.base_seed, 0);
    let initial = config
        .initial_state
        .sample(prepared.coefficients.mean_occupation, &mut rng);
    let _ = integrate_with_observer(
        &initial,
        &prepared.coefficients,
        &prepared.spec,
        &mut rng,
        |record, _t, state| profile[record] = Monomials::of_state(state),
    );
    profile
}

/// Propagates the full ensemble. `workers` sizes the thread pool; zero
/// means one thread per available CPU. The reduction is bitwise
/// independent of `workers`.
pub fn run_ensemble(
    config: &EnsembleConfig,
    device: &RawParams,
    workers: usize,
) -> Result<EnsembleRun, CoreError> {
    let prepared = config.prepare(device)?;
    run_prepared(&prepared, config, workers)
}

/// Like [`run_ensemble`], but with the derived quantities supplied by the
/// caller, allowing runs whose coefficients are not reachable from any
/// device description (a decoupled mirror, say). The config's trajectory
/// count, seed, initial state and batching are honoured; its device
/// overrides are ignored in favour of `prepared`.
pub fn run_prepared(
    prepared: &PreparedRun,
    config: &EnsembleConfig,
    workers: usize,
) -> Result<EnsembleRun, CoreError> {
    prepared.spec.validate(&prepared.coefficients)?;
    if config.n_trajectories == 0 {
        return Err(CoreError::Config("n_trajectories must be at least 1".into()));
    }
    if config.n_batches == 0 {
        return Err(CoreError::Config("n_batches must be at least 1".into()));
    }
    let n_records = prepared.spec.n_records();
    let n_batches = config.n_batches.min(config.n_trajectories);

    let reference = reference_profile(prepared, config);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CoreError::Config(format!("thread pool: {e}")))?;

    let batch_results: Vec<(Vec<MomentAccumulator>, usize)> = pool.install(|| {
        (0..n_batches)
            .into_par_iter()
            .map(|batch| {
                let mut accs = vec![MomentAccumulator::new(); n_records];
                let mut scratch = vec![Monomials::default(); n_records];
                let mut diverged = 0usize;
                let mut index = batch;
                while index < config.n_trajectories {
                    if trajectory_deviations(
                        index as u64,
                        prepared,
                        config,
                        &reference,
                        &mut scratch,
                    ) {
                        for (acc, dev) in accs.iter_mut().zip(scratch.iter()) {
                            acc.accumulate_deviation(dev);
                        }
                    } else {
                        diverged += 1;
                    }
                    index += n_batches;
                }
                (accs, diverged)
            })
            .collect()
    });

    let mut totals = vec![MomentAccumulator::new(); n_records];
    let mut diverged = 0usize;
    let mut batches = Vec::with_capacity(n_batches);
    for (accs, batch_diverged) in batch_results {
        for (total, acc) in totals.iter_mut().zip(accs.iter()) {
            total.merge(acc);
        }
        diverged += batch_diverged;
        batches.push(accs);
    }

    let times_s = (0..n_records)
        .map(|r| (r * prepared.spec.record_stride) as f64 * prepared.spec.dt_s)
        .collect();

    let degraded =
        (diverged as f64) > DIVERGENCE_WARN_FRACTION * config.n_trajectories as f64;

    Ok(EnsembleRun {
        times_s,
        reference,
        batches,
        totals,
        diverged,
        degraded,
        params: prepared.params,
        config: config.clone(),
    })
}

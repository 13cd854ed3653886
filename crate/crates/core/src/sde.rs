//! Exact stochastic equations of motion in the doubled phase space.
//!
//! The positive-P representation maps the pumped cavity plus mirror onto
//! four independent complex variables (alpha, alpha+, beta, beta+) obeying
//! Ito stochastic differential equations. With g A shortened to `gA` and
//! the thermal coefficient th = gamma_m (1 - 2 k_B T / hbar omega_m):
//!
//! ```text
//! d alpha  = [eps - (gamma + i Delta) alpha  + i gA alpha  (beta + beta+)] dt + noise
//! d alpha+ = [eps - (gamma - i Delta) alpha+ - i gA alpha+ (beta + beta+)] dt + noise
//! d beta   = [-i omega_m beta  - gamma_m (beta - beta+) + i gA alpha+ alpha] dt + noise
//! d beta+  = [ i omega_m beta+ + gamma_m (beta - beta+) - i gA alpha+ alpha] dt + noise
//! ```
//!
//! The noise couples the five independent real Wiener increments through
//! the 4 x 5 matrix (principal square roots throughout)
//!
//! ```text
//!          [ 0          sqrt(-i gA alpha / 2)   sqrt(i gA alpha / 2)    0                      0                      ]
//!    N  =  [ 0          0                       0                       sqrt(i gA alpha+ / 2)  -sqrt(-i gA alpha+ / 2)]
//!          [ -sqrt(th)  sqrt(-i gA alpha / 2)   -sqrt(i gA alpha / 2)   0                      0                      ]
//!          [ sqrt(th)   0                       0                       sqrt(i gA alpha+ / 2)  sqrt(-i gA alpha+ / 2) ]
//! ```
//!
//! which satisfies N N^T = D (plain transpose, no conjugation) with D the
//! symmetric diffusion matrix
//!
//! ```text
//!    D[alpha ][beta ] = -i gA alpha      D[beta ][beta ] = th
//!    D[alpha+][beta+] =  i gA alpha+     D[beta+][beta+] = th
//!                                        D[beta ][beta+] = -th
//! ```
//!
//! For a hot bath th < 0, so D is not positive semidefinite in the
//! classical phase space: the doubling is load-bearing, not decorative.
//!
//! Since the noise matrix does not depend on the variable it multiplies
//! within each drift component's Stratonovich correction (the corrections
//! vanish identically), the Ito and Stratonovich forms coincide and a
//! semi-implicit midpoint scheme integrates the equations directly.

use crate::error::CoreError;
use crate::params::PhysicalParams;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Largest dt * gamma the stochastic stepper accepts.
pub const MAX_SDE_DT_DECAY: f64 = 0.01;

/// Default per-component magnitude beyond which a trajectory counts as
/// diverged.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e8;

/// Default number of corrector iterations in the midpoint stepper.
pub const DEFAULT_CORRECTOR_ITERATIONS: usize = 3;

/// One point of the doubled phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSpaceState {
    pub alpha: Complex64,
    pub alpha_plus: Complex64,
    pub beta: Complex64,
    pub beta_plus: Complex64,
}

impl PhaseSpaceState {
    /// Both modes empty.
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// State on the classical manifold: plus components are conjugates.
    pub fn from_classical(alpha: Complex64, beta: Complex64) -> Self {
        Self {
            alpha,
            alpha_plus: alpha.conj(),
            beta,
            beta_plus: beta.conj(),
        }
    }

    /// Largest component magnitude; used for divergence detection.
    pub fn max_component_norm(&self) -> f64 {
        self.alpha
            .norm_sqr()
            .max(self.alpha_plus.norm_sqr())
            .max(self.beta.norm_sqr())
            .max(self.beta_plus.norm_sqr())
            .sqrt()
    }

    /// Distance from the classical manifold alpha+ = conj(alpha),
    /// beta+ = conj(beta), relative to the state magnitude.
    pub fn conjugation_defect(&self) -> f64 {
        let scale = 1.0 + self.max_component_norm();
        ((self.alpha_plus - self.alpha.conj()).norm()
            + (self.beta_plus - self.beta.conj()).norm())
            / scale
    }

    fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.alpha_plus.is_finite()
            && self.beta.is_finite()
            && self.beta_plus.is_finite()
    }
}

/// Initial-state choices for trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Field and mirror both empty.
    Vacuum,
    /// Mirror in a coherent state of amplitude sqrt(n_bar), field empty.
    CoherentMirror,
    /// Mirror drawn from the thermal Gaussian of occupation n_bar on the
    /// classical manifold, field empty.
    ThermalMirror,
}

/// Deterministic coherent-mirror initial state beta = beta+ = sqrt(n_bar).
pub fn sample_initial_coherent(occupation: f64) -> PhaseSpaceState {
    let amp = Complex64::new(occupation.sqrt(), 0.0);
    PhaseSpaceState {
        alpha: Complex64::ZERO,
        alpha_plus: Complex64::ZERO,
        beta: amp,
        beta_plus: amp,
    }
}

/// Thermal-mirror initial state: beta complex Gaussian with
/// <|beta|^2> = n_bar, beta+ = conj(beta).
pub fn sample_initial_thermal<R: Rng>(occupation: f64, rng: &mut R) -> PhaseSpaceState {
    let s = (0.5 * occupation).sqrt();
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    let beta = Complex64::new(s * g1, s * g2);
    PhaseSpaceState {
        alpha: Complex64::ZERO,
        alpha_plus: Complex64::ZERO,
        beta,
        beta_plus: beta.conj(),
    }
}

impl InitialState {
    /// Samples the configured initial state. The vacuum and coherent
    /// choices consume no randomness.
    pub fn sample<R: Rng>(&self, occupation: f64, rng: &mut R) -> PhaseSpaceState {
        match self {
            InitialState::Vacuum => PhaseSpaceState::vacuum(),
            InitialState::CoherentMirror => sample_initial_coherent(occupation),
            InitialState::ThermalMirror => sample_initial_thermal(occupation, rng),
        }
    }
}

/// Precomputed coefficients driving drift and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeCoefficients {
    /// Pump amplitude epsilon (1/s), real.
    pub pump: f64,
    /// Cavity decay gamma (1/s).
    pub gamma: f64,
    /// Detuning Delta (rad/s).
    pub delta: f64,
    /// Mirror frequency omega_m (rad/s).
    pub omega_m: f64,
    /// Mirror damping gamma_m (1/s).
    pub gamma_m: f64,
    /// Coupling g A (1/s).
    pub ga: f64,
    /// Thermal diffusion coefficient gamma_m (1 - 2 n_bar); negative when hot.
    pub thermal_coefficient: f64,
    /// Principal sqrt of the thermal coefficient.
    pub thermal_root: Complex64,
    /// Mean occupation n_bar, for initial-state sampling.
    pub mean_occupation: f64,
}

impl SdeCoefficients {
    pub fn new(params: &PhysicalParams) -> Self {
        let thermal_coefficient = params.thermal_diffusion_coefficient();
        Self {
            pump: params.pump_amplitude,
            gamma: params.cavity_decay_rate,
            delta: params.raw.detuning,
            omega_m: params.raw.mirror_angular_frequency,
            gamma_m: params.mirror_damping_rate,
            ga: params.coupling * params.position_scale_m,
            thermal_coefficient,
            thermal_root: principal_sqrt(Complex64::new(thermal_coefficient, 0.0)),
            mean_occupation: params.mean_occupation,
        }
    }
}

/// Principal branch complex square root, algebraic form (no trigonometry).
/// Matches `Complex64::sqrt` away from the negative-real branch cut.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::ZERO;
    }
    if z.re >= 0.0 {
        let u = ((r + z.re) * 0.5).sqrt();
        Complex64::new(u, z.im / (2.0 * u))
    } else {
        let v = ((r - z.re) * 0.5).sqrt();
        Complex64::new(z.im.abs() / (2.0 * v), v.copysign(z.im))
    }
}

/// Deterministic part of the equations of motion.
#[inline]
pub fn pp_drift(s: &PhaseSpaceState, c: &SdeCoefficients) -> PhaseSpaceState {
    let i = Complex64::new(0.0, 1.0);
    let xb = s.beta + s.beta_plus;
    let intensity = s.alpha_plus * s.alpha;
    let force = i * (c.ga * intensity);
    PhaseSpaceState {
        alpha: c.pump - Complex64::new(c.gamma, c.delta) * s.alpha
            + i * (c.ga * (s.alpha * xb)),
        alpha_plus: c.pump - Complex64::new(c.gamma, -c.delta) * s.alpha_plus
            - i * (c.ga * (s.alpha_plus * xb)),
        beta: -i * (c.omega_m * s.beta) - c.gamma_m * (s.beta - s.beta_plus) + force,
        beta_plus: i * (c.omega_m * s.beta_plus) + c.gamma_m * (s.beta - s.beta_plus)
            - force,
    }
}

/// The five distinct noise-matrix entries at a state:
/// (sqrt(th), sqrt(-i gA alpha / 2), sqrt(i gA alpha / 2),
///  sqrt(i gA alpha+ / 2), sqrt(-i gA alpha+ / 2)).
#[inline]
fn noise_symbols(s: &PhaseSpaceState, c: &SdeCoefficients) -> [Complex64; 5] {
    let half = 0.5 * c.ga;
    let minus_i_half_a = Complex64::new(half * s.alpha.im, -half * s.alpha.re);
    let plus_i_half_a = -minus_i_half_a;
    let minus_i_half_ap = Complex64::new(half * s.alpha_plus.im, -half * s.alpha_plus.re);
    let plus_i_half_ap = -minus_i_half_ap;
    [
        c.thermal_root,
        principal_sqrt(minus_i_half_a),
        principal_sqrt(plus_i_half_a),
        principal_sqrt(plus_i_half_ap),
        principal_sqrt(minus_i_half_ap),
    ]
}

/// The full 4 x 5 noise matrix N at a state.
pub fn noise_matrix(s: &PhaseSpaceState, c: &SdeCoefficients) -> [[Complex64; 5]; 4] {
    let [th, s2, s3, s4, s5] = noise_symbols(s, c);
    let z = Complex64::ZERO;
    [
        [z, s2, s3, z, z],
        [z, z, z, s4, -s5],
        [-th, s2, -s3, z, z],
        [th, z, z, s4, s5],
    ]
}

/// N applied to the scaled noise vector w (w_k ~ Normal(0, dt)), using the
/// same symbols as [`noise_matrix`].
#[inline]
fn apply_noise(
    s: &PhaseSpaceState,
    c: &SdeCoefficients,
    w: &[f64; 5],
) -> PhaseSpaceState {
    let [th, s2, s3, s4, s5] = noise_symbols(s, c);
    let field = s2 * w[1] + s3 * w[2];
    let field_plus = s4 * w[3] - s5 * w[4];
    PhaseSpaceState {
        alpha: field,
        alpha_plus: field_plus,
        beta: -th * w[0] + s2 * w[1] - s3 * w[2],
        beta_plus: th * w[0] + s4 * w[3] + s5 * w[4],
    }
}

/// The symmetric 4 x 4 diffusion matrix D at a state, written directly
/// from the Fokker-Planck equation rather than via N.
pub fn diffusion_matrix(s: &PhaseSpaceState, c: &SdeCoefficients) -> [[Complex64; 4]; 4] {
    let i = Complex64::new(0.0, 1.0);
    let th = Complex64::new(c.thermal_coefficient, 0.0);
    let mut d = [[Complex64::ZERO; 4]; 4];
    d[0][2] = -i * (c.ga * s.alpha);
    d[2][0] = d[0][2];
    d[1][3] = i * (c.ga * s.alpha_plus);
    d[3][1] = d[1][3];
    d[2][2] = th;
    d[3][3] = th;
    d[2][3] = -th;
    d[3][2] = -th;
    d
}

/// Largest entrywise residual of N N^T - D, each entry scaled by
/// max(1, |D_ij|).
pub fn factorization_residual(s: &PhaseSpaceState, c: &SdeCoefficients) -> f64 {
    let n = noise_matrix(s, c);
    let d = diffusion_matrix(s, c);
    let mut worst = 0.0f64;
    for row in 0..4 {
        for col in 0..4 {
            let prod: Complex64 = n[row].iter().zip(n[col].iter()).map(|(a, b)| a * b).sum();
            let scale = d[row][col].norm().max(1.0);
            worst = worst.max((prod - d[row][col]).norm() / scale);
        }
    }
    worst
}

/// Minimum eigenvalue of the Hermitian part (D + D^dagger)/2, computed on
/// the equivalent real symmetric 8 x 8 matrix.
pub fn diffusion_min_eigenvalue(s: &PhaseSpaceState, c: &SdeCoefficients) -> f64 {
    let d = diffusion_matrix(s, c);
    // Hermitian part H = (D + D^dagger)/2; realified as [[Re H, -Im H],
    // [Im H, Re H]], whose spectrum is that of H doubled.
    let mut m = DMatrix::<f64>::zeros(8, 8);
    for row in 0..4 {
        for col in 0..4 {
            let h = 0.5 * (d[row][col] + d[col][row].conj());
            m[(row, col)] = h.re;
            m[(row + 4, col + 4)] = h.re;
            m[(row, col + 4)] = -h.im;
            m[(row + 4, col)] = h.im;
        }
    }
    let eigen = SymmetricEigen::new(m);
    eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Whether the diffusion matrix is positive semidefinite at `s`, within
/// tolerance -1e-10 * max|D_ij|. Returns the verdict and the minimum
/// eigenvalue of the Hermitian part.
pub fn is_diffusion_psd(s: &PhaseSpaceState, c: &SdeCoefficients) -> (bool, f64) {
    let d = diffusion_matrix(s, c);
    let scale = d
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let min_eig = diffusion_min_eigenvalue(s, c);
    (min_eig >= -1e-10 * scale, min_eig)
}

/// One semi-implicit midpoint step of size dt.
///
/// The midpoint state is found by fixed-point iteration
/// (`corrector_iterations` passes, the same noise vector each pass) and
/// the update is X' = 2 X_mid - X, which realises
/// X' = X + drift(X_mid) dt + N(X_mid) w. For zero noise this is the
/// implicit-midpoint Runge-Kutta scheme with local error O(dt^3).
#[inline]
pub fn step(
    state: &PhaseSpaceState,
    c: &SdeCoefficients,
    dt: f64,
    w: &[f64; 5],
    corrector_iterations: usize,
) -> PhaseSpaceState {
    let mut mid = *state;
    for _ in 0..corrector_iterations {
        let d = pp_drift(&mid, c);
        let n = apply_noise(&mid, c, w);
        mid = PhaseSpaceState {
            alpha: state.alpha + 0.5 * (d.alpha * dt + n.alpha),
            alpha_plus: state.alpha_plus + 0.5 * (d.alpha_plus * dt + n.alpha_plus),
            beta: state.beta + 0.5 * (d.beta * dt + n.beta),
            beta_plus: state.beta_plus + 0.5 * (d.beta_plus * dt + n.beta_plus),
        };
    }
    PhaseSpaceState {
        alpha: 2.0 * mid.alpha - state.alpha,
        alpha_plus: 2.0 * mid.alpha_plus - state.alpha_plus,
        beta: 2.0 * mid.beta - state.beta,
        beta_plus: 2.0 * mid.beta_plus - state.beta_plus,
    }
}

/// Step-level controls for a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub dt_s: f64,
    pub n_steps: usize,
    pub record_stride: usize,
    pub corrector_iterations: usize,
    /// Number of sub-draws each Wiener increment is assembled from.
    /// Refinement r draws r normals per noise channel per step so that a
    /// run at (dt, r = 2) consumes the identical stream as one at
    /// (dt / 2, r = 1), coupling coarse and fine paths for convergence
    /// checks.
    pub noise_refinement: usize,
    pub divergence_threshold: f64,
}

impl TrajectorySpec {
    pub fn validate(&self, c: &SdeCoefficients) -> Result<(), CoreError> {
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(CoreError::Config(format!(
                "dt_s must be positive, got {}",
                self.dt_s
            )));
        }
        if self.dt_s * c.gamma > MAX_SDE_DT_DECAY {
            return Err(CoreError::Config(format!(
                "dt * gamma = {:.3e} exceeds {MAX_SDE_DT_DECAY}",
                self.dt_s * c.gamma
            )));
        }
        if self.n_steps == 0 {
            return Err(CoreError::Config("n_steps must be at least 1".into()));
        }
        if self.record_stride == 0 || !self.n_steps.is_multiple_of(self.record_stride) {
            return Err(CoreError::Config(format!(
                "record_stride {} must divide n_steps {}",
                self.record_stride, self.n_steps
            )));
        }
        if !(self.corrector_iterations == 3 || self.corrector_iterations == 4) {
            return Err(CoreError::Config(format!(
                "corrector_iterations must be 3 or 4, got {}",
                self.corrector_iterations
            )));
        }
        if self.noise_refinement == 0 || self.noise_refinement > 16 {
            return Err(CoreError::Config(format!(
                "noise_refinement must be in 1..=16, got {}",
                self.noise_refinement
            )));
        }
        if self.divergence_threshold.is_nan() || self.divergence_threshold <= 0.0 {
            return Err(CoreError::Config(format!(
                "divergence_threshold must be positive, got {}",
                self.divergence_threshold
            )));
        }
        Ok(())
    }

    pub fn n_records(&self) -> usize {
        self.n_steps / self.record_stride + 1
    }
}

/// The per-trajectory random stream: a ChaCha12 generator keyed by the run
/// seed on a counter-selected stream, so trajectory `index` is independent
/// of every other and of how trajectories are distributed over workers.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Deterministic sample of general (off-manifold) states with component
/// real and imaginary parts up to `scale` in magnitude and random phases,
/// for probing the diffusion and noise matrices.
pub fn probe_states(seed: u64, count: usize, scale: f64) -> Vec<PhaseSpaceState> {
    let mut rng = trajectory_rng(seed, u64::MAX);
    let mut draw = move || {
        Complex64::new(
            scale * (rng.random::<f64>() * 2.0 - 1.0),
            scale * (rng.random::<f64>() * 2.0 - 1.0),
        )
    };
    (0..count)
        .map(|_| PhaseSpaceState {
            alpha: draw(),
            alpha_plus: draw(),
            beta: draw(),
            beta_plus: draw(),
        })
        .collect()
}

/// Integrates one trajectory, invoking `observe(record_index, t, state)`
/// at t = 0 and every `record_stride` steps. Returns the divergence error
/// if any component magnitude exceeds the threshold.
pub fn integrate_with_observer<R: Rng, F: FnMut(usize, f64, &PhaseSpaceState)>(
    initial: &PhaseSpaceState,
    c: &SdeCoefficients,
    spec: &TrajectorySpec,
    rng: &mut R,
    mut observe: F,
) -> Result<(), CoreError> {
    spec.validate(c)?;
    let mut state = *initial;
    let threshold_sq = spec.divergence_threshold * spec.divergence_threshold;
    let sub_scale = (spec.dt_s / spec.noise_refinement as f64).sqrt();
    let mut record = 0usize;
    observe(record, 0.0, &state);
    for step_index in 1..=spec.n_steps {
        let mut w = [0.0f64; 5];
        for _ in 0..spec.noise_refinement {
            for slot in &mut w {
                let draw: f64 = rng.sample(StandardNormal);
                *slot += sub_scale * draw;
            }
        }
        state = step(&state, c, spec.dt_s, &w, spec.corrector_iterations);
        let over = state.alpha.norm_sqr() > threshold_sq
            || state.alpha_plus.norm_sqr() > threshold_sq
            || state.beta.norm_sqr() > threshold_sq
            || state.beta_plus.norm_sqr() > threshold_sq;
        if over || !state.is_finite() {
            return Err(CoreError::Diverged {
                time_s: step_index as f64 * spec.dt_s,
            });
        }
        if step_index % spec.record_stride == 0 {
            record += 1;
            observe(record, step_index as f64 * spec.dt_s, &state);
        }
    }
    Ok(())
}

/// Runs one trajectory from the deterministic stream `(base_seed, index)`
/// and returns the recorded states (t = 0 first).
pub fn run_trajectory(
    initial_kind: InitialState,
    c: &SdeCoefficients,
    spec: &TrajectorySpec,
    base_seed: u64,
    index: u64,
) -> Result<Vec<PhaseSpaceState>, CoreError> {
    let mut rng = trajectory_rng(base_seed, index);
    let initial = initial_kind.sample(c.mean_occupation, &mut rng);
    let mut records = Vec::with_capacity(spec.n_records());
    integrate_with_observer(&initial, c, spec, &mut rng, |_, _, s| records.push(*s))?;
    Ok(records)
}

//! Classical mean-field dynamics of the pendular cavity.
//!
//! Factorising all quantum correlations gives two coupled complex equations
//! for the field amplitude alpha and the mirror mode amplitude beta:
//!
//! ```text
//! d alpha / dt = epsilon - (gamma + i Delta) alpha + i g A alpha (beta + beta*)
//! d beta  / dt = -i omega_m beta - gamma_m (beta - beta*) + i g A |alpha|^2
//! ```
//!
//! Steady states satisfy beta_ss = (g A / omega_m) |alpha_ss|^2 (real) and
//! alpha_ss = epsilon / (gamma + i (Delta - 2 g A beta_ss)). Eliminating the
//! mirror turns the steady-state condition into a cubic in the intensity
//! I = |alpha_ss|^2:
//!
//! ```text
//! (4 g^4 A^4 / omega_m^2) I^3 - (4 g^2 A^2 Delta / omega_m) I^2
//!     + (gamma^2 + Delta^2) I - epsilon^2 = 0
//! ```
//!
//! which develops three positive roots (bistability) exactly when
//! Delta > sqrt(3) gamma.

use crate::error::CoreError;
use crate::params::PhysicalParams;
use num_complex::Complex64;

/// Largest dt * gamma accepted by the fixed-step integrator.
pub const MAX_CLASSICAL_DT_DECAY: f64 = 0.05;

/// Mean-field state (field amplitude, mirror amplitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl ClassicalState {
    /// Both modes empty; the usual start for a pump switch-on.
    pub fn at_rest() -> Self {
        Self {
            alpha: Complex64::ZERO,
            beta: Complex64::ZERO,
        }
    }

    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        Self {
            alpha: self.alpha + d.alpha * h,
            beta: self.beta + d.beta * h,
        }
    }

    fn is_finite(&self) -> bool {
        self.alpha.re.is_finite()
            && self.alpha.im.is_finite()
            && self.beta.re.is_finite()
            && self.beta.im.is_finite()
    }
}

/// Right-hand side of the mean-field equations.
pub fn mean_drift(state: &ClassicalState, params: &PhysicalParams) -> ClassicalState {
    let i = Complex64::new(0.0, 1.0);
    let ga = params.coupling * params.position_scale_m;
    let gamma = params.cavity_decay_rate;
    let delta = params.raw.detuning;
    let omega_m = params.raw.mirror_angular_frequency;
    let gamma_m = params.mirror_damping_rate;

    let xb = state.beta + state.beta.conj();
    let d_alpha = params.pump_amplitude - (gamma + i * delta) * state.alpha
        + i * ga * state.alpha * xb;
    let d_beta = -i * omega_m * state.beta - gamma_m * (state.beta - state.beta.conj())
        + i * ga * state.alpha.norm_sqr();
    ClassicalState {
        alpha: d_alpha,
        beta: d_beta,
    }
}

/// Recorded mean-field evolution at equally spaced times.
#[derive(Debug, Clone)]
pub struct ClassicalSeries {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
}

impl ClassicalSeries {
    /// |alpha|^2 at each record.
    pub fn intensity(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.alpha.norm_sqr()).collect()
    }

    /// Mirror position x = 2 A Re(beta) in metres at each record.
    pub fn position_m(&self, params: &PhysicalParams) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| 2.0 * params.position_scale_m * s.beta.re)
            .collect()
    }

    /// Mirror momentum 2 |B| Im(beta) (kg m/s) at each record.
    pub fn momentum(&self, params: &PhysicalParams) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| 2.0 * params.momentum_scale * s.beta.im)
            .collect()
    }
}

/// Fixed-step fourth-order Runge-Kutta integration of the mean-field
/// equations, recording every `record_stride` steps (including t = 0).
///
/// Requires dt * gamma <= [`MAX_CLASSICAL_DT_DECAY`] and
/// `n_steps % record_stride == 0`.
pub fn integrate_classical(
    initial: ClassicalState,
    params: &PhysicalParams,
    dt_s: f64,
    n_steps: usize,
    record_stride: usize,
) -> Result<ClassicalSeries, CoreError> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(CoreError::Config(format!("dt_s must be positive, got {dt_s}")));
    }
    if dt_s * params.cavity_decay_rate > MAX_CLASSICAL_DT_DECAY {
        return Err(CoreError::Config(format!(
            "dt * gamma = {:.3e} exceeds {MAX_CLASSICAL_DT_DECAY}",
            dt_s * params.cavity_decay_rate
        )));
    }
    if record_stride == 0 || !n_steps.is_multiple_of(record_stride) {
        return Err(CoreError::Config(format!(
            "record_stride {record_stride} must divide n_steps {n_steps}"
        )));
    }

    let n_records = n_steps / record_stride + 1;
    let mut times = Vec::with_capacity(n_records);
    let mut states = Vec::with_capacity(n_records);
    let mut state = initial;
    times.push(0.0);
    states.push(state);

    for step in 1..=n_steps {
        let k1 = mean_drift(&state, params);
        let k2 = mean_drift(&state.add_scaled(&k1, 0.5 * dt_s), params);
        let k3 = mean_drift(&state.add_scaled(&k2, 0.5 * dt_s), params);
        let k4 = mean_drift(&state.add_scaled(&k3, dt_s), params);
        let incr = ClassicalState {
            alpha: (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha) / 6.0,
            beta: (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta) / 6.0,
        };
        state = state.add_scaled(&incr, dt_s);
        if !state.is_finite() {
            return Err(CoreError::Diverged {
                time_s: step as f64 * dt_s,
            });
        }
        if step % record_stride == 0 {
            times.push(step as f64 * dt_s);
            states.push(state);
        }
    }
    Ok(ClassicalSeries { times, states })
}

/// Result of the steady-state fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Steady field amplitude.
    pub alpha: Complex64,
    /// Steady mirror amplitude; real by construction.
    pub beta: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Whether both fixed-point residuals dropped below tolerance.
    pub converged: bool,
    /// Mirror-amplitude iterate history, useful when the iteration cycles.
    pub history: Vec<f64>,
    /// Final residual of alpha = epsilon / (gamma + i (Delta - 2 g A beta)).
    pub residual_alpha: f64,
    /// Final residual of beta = (g A / omega_m) |alpha|^2.
    pub residual_beta: f64,
}

/// Runs [`steady_state_iterative_with`] at tolerance 1e-12 and at most
/// 10_000 iterations.
pub fn steady_state_iterative(params: &PhysicalParams) -> SteadyState {
    steady_state_iterative_with(params, 1e-12, 10_000)
}

/// Fixed-point iteration for the mean-field steady state, starting from
/// alpha = epsilon / gamma. When successive mirror iterates two-cycle the
/// update is relaxed with damping 0.5. Non-convergence is reported in-band
/// through `converged` and `history`, not as an error: a cycling iteration
/// is the mean-field signature of self-pulsing.
pub fn steady_state_iterative_with(
    params: &PhysicalParams,
    tol: f64,
    max_iter: usize,
) -> SteadyState {
    let gamma = params.cavity_decay_rate;
    let delta = params.raw.detuning;
    let omega_m = params.raw.mirror_angular_frequency;
    let ga = params.coupling * params.position_scale_m;
    let eps = params.pump_amplitude;

    let alpha_of = |beta: f64| {
        Complex64::new(eps, 0.0) / Complex64::new(gamma, delta - 2.0 * ga * beta)
    };
    let beta_of = |alpha: Complex64| ga / omega_m * alpha.norm_sqr();

    let mut beta = beta_of(Complex64::new(eps / gamma, 0.0));
    let mut history = vec![beta];
    let mut damping = 1.0;
    let mut prev_increment = 0.0f64;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let target = beta_of(alpha_of(beta));
        let increment = target - beta;
        if increment * prev_increment < 0.0 {
            damping = 0.5;
        }
        let next = beta + damping * increment;
        history.push(next);
        let step_ok = (next - beta).abs() <= tol * (1.0 + beta.abs());
        prev_increment = increment;
        beta = next;
        if step_ok {
            converged = true;
            break;
        }
    }

    let alpha = alpha_of(beta);
    let alpha_target = alpha_of(beta);
    let beta_target = beta_of(alpha);
    let residual_alpha = (alpha - alpha_target).norm() / (1.0 + alpha_target.norm());
    let residual_beta = (beta - beta_target).abs() / (1.0 + beta_target.abs());
    let converged = converged && residual_alpha <= tol && residual_beta <= tol;

    SteadyState {
        alpha,
        beta,
        iterations,
        converged,
        history,
        residual_alpha,
        residual_beta,
    }
}

/// Dimensionless drift magnitude at a candidate steady state: each mode's
/// drift normalised by its fastest rate and amplitude scale.
pub fn normalized_drift_residual(
    state: &ClassicalState,
    params: &PhysicalParams,
) -> f64 {
    let d = mean_drift(state, params);
    let gamma = params.cavity_decay_rate;
    let omega_m = params.raw.mirror_angular_frequency;
    d.alpha.norm() / (gamma * (1.0 + state.alpha.norm()))
        + d.beta.norm() / (omega_m * (1.0 + state.beta.norm()))
}

/// Adiabatic field response at mirror displacement x (metres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturesAtX {
    /// In-phase field quadrature <X_a>.
    pub x_a: f64,
    /// Out-of-phase field quadrature <Y_a>.
    pub y_a: f64,
    /// Intracavity intensity |alpha|^2.
    pub intensity: f64,
}

/// Exact adiabatic field response when the mirror is held at x:
/// alpha = epsilon / (gamma + i (Delta - g x)).
pub fn quadratures_vs_x(x_m: f64, params: &PhysicalParams) -> QuadraturesAtX {
    let gamma = params.cavity_decay_rate;
    let eps = params.pump_amplitude;
    let det = params.raw.detuning - params.coupling * x_m;
    let denom = gamma * gamma + det * det;
    QuadraturesAtX {
        x_a: 2.0 * eps * gamma / denom,
        y_a: -2.0 * eps * det / denom,
        intensity: eps * eps / denom,
    }
}

/// Small-displacement expansion of [`quadratures_vs_x`] about resonance:
///
/// ```text
/// X_a ~ (2 eps / gamma)     (1 - g^2 x^2 / gamma^2)
/// Y_a ~ (2 g eps x/gamma^2) (1 - g^2 x^2 / gamma^2)
/// I   ~ (eps^2 / gamma^2)   (1 - g^2 x^2 / gamma^2)
/// ```
///
/// Only Y_a changes at first order in x, which is why the phase quadrature
/// is the natural position meter. Requires zero detuning and
/// g^2 x^2 < gamma^2.
pub fn quadratures_vs_x_expansion(
    x_m: f64,
    params: &PhysicalParams,
) -> Result<QuadraturesAtX, CoreError> {
    if params.raw.detuning != 0.0 {
        return Err(CoreError::Domain {
            context: "quadratures_vs_x_expansion",
            detail: "expansion is defined at zero detuning".into(),
        });
    }
    let gamma = params.cavity_decay_rate;
    let gx = params.coupling * x_m;
    if gx * gx >= gamma * gamma {
        return Err(CoreError::Domain {
            context: "quadratures_vs_x_expansion",
            detail: format!("g^2 x^2 = {:.3e} must stay below gamma^2 = {:.3e}", gx * gx, gamma * gamma),
        });
    }
    let eps = params.pump_amplitude;
    let correction = 1.0 - gx * gx / (gamma * gamma);
    Ok(QuadraturesAtX {
        x_a: 2.0 * eps / gamma * correction,
        y_a: 2.0 * gx * eps / (gamma * gamma) * correction,
        intensity: eps * eps / (gamma * gamma) * correction,
    })
}

/// Steady-state structure of the intensity cubic at the configured pump
/// and detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityReport {
    /// Cubic coefficients [c3, c2, c1, c0] of c3 I^3 + c2 I^2 + c1 I + c0.
    pub coefficients: [f64; 4],
    /// Real non-negative roots in ascending order.
    pub roots: Vec<f64>,
    /// Turning-point intensities (r_minus, r_plus) of the cubic, present
    /// exactly when Delta > sqrt(3) gamma.
    pub turning_points: Option<(f64, f64)>,
    /// Whether this (Delta, epsilon) sits in the three-root region.
    pub bistable: bool,
    /// The detuning threshold sqrt(3) gamma above which a fold exists.
    pub threshold_detuning: f64,
}

fn cubic_coefficients(params: &PhysicalParams) -> [f64; 4] {
    let ga = params.coupling * params.position_scale_m;
    let ga2 = ga * ga;
    let omega_m = params.raw.mirror_angular_frequency;
    let gamma = params.cavity_decay_rate;
    let delta = params.raw.detuning;
    let eps = params.pump_amplitude;
    [
        4.0 * ga2 * ga2 / (omega_m * omega_m),
        -4.0 * ga2 * delta / omega_m,
        gamma * gamma + delta * delta,
        -eps * eps,
    ]
}

fn eval_cubic(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn eval_cubic_derivative(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// All real roots of a cubic with c3 > 0, each refined by one Newton step.
fn real_cubic_roots(c: &[f64; 4]) -> Vec<f64> {
    let b = c[1] / c[0];
    let p1 = c[2] / c[0];
    let p0 = c[3] / c[0];
    // Depressed form t^3 + p t + q with x = t - b/3.
    let shift = b / 3.0;
    let p = p1 - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * p1 / 3.0 + p0;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-0.5 * q + s).cbrt();
        let v = (-0.5 * q - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (-0.5 * q / (r * r * r)).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| {
                2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos()
                    - shift
            })
            .collect()
    };

    for root in &mut roots {
        let d = eval_cubic_derivative(c, *root);
        if d != 0.0 {
            let step = eval_cubic(c, *root) / d;
            if step.is_finite() {
                *root -= step;
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Turning-point intensities of the steady-state cubic, present when
/// Delta > sqrt(3) gamma:
/// r_pm = Delta omega_m / (3 g^2 A^2)
///        +- (omega_m / 6 g^2 A^2) sqrt(Delta^2 - 3 gamma^2).
pub fn turning_points(params: &PhysicalParams) -> Option<(f64, f64)> {
    let gamma = params.cavity_decay_rate;
    let delta = params.raw.detuning;
    let disc = delta * delta - 3.0 * gamma * gamma;
    if delta <= 0.0 || disc <= 0.0 {
        return None;
    }
    let ga = params.coupling * params.position_scale_m;
    let ga2 = ga * ga;
    let omega_m = params.raw.mirror_angular_frequency;
    let center = delta * omega_m / (3.0 * ga2);
    let half_width = omega_m * disc.sqrt() / (6.0 * ga2);
    Some((center - half_width, center + half_width))
}

/// Pump-amplitude window (eps_low, eps_high) inside which the cubic has
/// three positive roots; present exactly when Delta > sqrt(3) gamma.
pub fn bistable_pump_window(params: &PhysicalParams) -> Option<(f64, f64)> {
    let (r_minus, r_plus) = turning_points(params)?;
    let c = cubic_coefficients(params);
    // Value of the eps-independent part at the turning points.
    let f = |i: f64| ((c[0] * i + c[1]) * i + c[2]) * i;
    let low = f(r_plus);
    let high = f(r_minus);
    if low <= 0.0 || high <= low {
        return None;
    }
    Some((low.sqrt(), high.sqrt()))
}

/// Solves the steady-state intensity cubic at the configured pump and
/// detuning and classifies the bistable structure.
pub fn bistability_analysis(params: &PhysicalParams) -> BistabilityReport {
    let coefficients = cubic_coefficients(params);
    let gamma = params.cavity_decay_rate;
    let roots: Vec<f64> = real_cubic_roots(&coefficients)
        .into_iter()
        .filter(|r| *r >= 0.0)
        .collect();
    let turning = turning_points(params);
    BistabilityReport {
        coefficients,
        bistable: roots.len() == 3,
        roots,
        turning_points: turning,
        threshold_detuning: 3.0f64.sqrt() * gamma,
    }
}

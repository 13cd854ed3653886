//! Physical observables from accumulated phase-space moments.
//!
//! Phase-space averages of the doubled variables equal normally-ordered
//! operator averages, so operator variances pick up vacuum terms on top of
//! the c-number covariances:
//!
//! ```text
//! V(X) = 1 + Cov(x, x)            for a quadrature X in {X_a, Y_a, X_b, Y_b}
//! V(N) = Cov(n, n) + <n>          for the photon number, n = alpha+ alpha
//! ```
//!
//! with X_a = alpha + alpha+, Y_a = -i (alpha - alpha+), and likewise for
//! the mirror. Mirror position and momentum follow as x = A X_b and
//! p = |B| Y_b with the zero-point scales A and |B|.
//!
//! Correlations are normalised by the operator variances,
//! C(u, v) = Cov(u, v) / sqrt(V(u) V(v)), and the conditional inference
//! variance of the mirror position given a field readout F is
//!
//! ```text
//! V_inf(X_b | F) = V(X_b) - Cov(X_b, F)^2 / V(F)
//! ```
//!
//! which can drop below the thermal variance when field and mirror are
//! correlated, and never exceeds V(X_b).
//!
//! All covariances are evaluated against the ensemble's reference profile
//! in the cancellation-mild form
//!
//! ```text
//! Cov(u, v) = <d_uv> - u0 <d_v> - v0 <d_u> - <d_u><d_v> + ((uv)0 - u0 v0)
//! ```
//!
//! where d are deviations from the reference and the 0-superscripts the
//! reference values themselves. Variances divide by the sample count, not
//! count - 1.

use crate::accumulator::{MomentAccumulator, Monomials};
use crate::ensemble::EnsembleRun;
use crate::error::CoreError;
use crate::params::PhysicalParams;
use num_complex::Complex64;

/// The measurable quantities correlations can be taken between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// X_a = alpha + alpha+.
    FieldAmplitude,
    /// Y_a = -i (alpha - alpha+).
    FieldPhase,
    /// N_a = alpha+ alpha.
    PhotonNumber,
    /// X_b = beta + beta+.
    MirrorPosition,
    /// Y_b = -i (beta - beta+).
    MirrorMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisVar {
    A,
    Ap,
    B,
    Bp,
}

fn var_value(m: &Monomials, v: BasisVar) -> Complex64 {
    match v {
        BasisVar::A => m.a,
        BasisVar::Ap => m.ap,
        BasisVar::B => m.b,
        BasisVar::Bp => m.bp,
    }
}

fn prod_value(m: &Monomials, u: BasisVar, v: BasisVar) -> Complex64 {
    use BasisVar::*;
    match (u, v) {
        (A, A) => m.aa,
        (A, Ap) | (Ap, A) => m.aap,
        (A, B) | (B, A) => m.ab,
        (A, Bp) | (Bp, A) => m.abp,
        (Ap, Ap) => m.apap,
        (Ap, B) | (B, Ap) => m.apb,
        (Ap, Bp) | (Bp, Ap) => m.apbp,
        (B, B) => m.bb,
        (B, Bp) | (Bp, B) => m.bbp,
        (Bp, Bp) => m.bpbp,
    }
}

fn quad_parts(obs: Observable) -> Option<[(BasisVar, Complex64); 2]> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match obs {
        Observable::FieldAmplitude => Some([(BasisVar::A, one), (BasisVar::Ap, one)]),
        Observable::FieldPhase => Some([(BasisVar::A, -i), (BasisVar::Ap, i)]),
        Observable::MirrorPosition => Some([(BasisVar::B, one), (BasisVar::Bp, one)]),
        Observable::MirrorMomentum => Some([(BasisVar::B, -i), (BasisVar::Bp, i)]),
        Observable::PhotonNumber => None,
    }
}

/// Moment statistics of one record, ready for observable evaluation.
#[derive(Debug, Clone)]
pub struct MomentStats {
    count: u64,
    reference: Monomials,
    mean_dev: Monomials,
}

impl MomentStats {
    /// Builds statistics from an accumulator and its reference profile.
    pub fn new(
        acc: &MomentAccumulator,
        reference: &Monomials,
    ) -> Result<Self, CoreError> {
        let mean_dev = acc.mean_deviation().ok_or_else(|| {
            CoreError::InsufficientData("no completed trajectories in record".into())
        })?;
        Ok(Self {
            count: acc.count,
            reference: *reference,
            mean_dev,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Phase-space mean of an observable (real for Hermitian quantities up
    /// to sampling noise).
    pub fn mean(&self, obs: Observable) -> Complex64 {
        match quad_parts(obs) {
            Some(parts) => parts
                .iter()
                .map(|(v, coef)| {
                    coef * (var_value(&self.reference, *v) + var_value(&self.mean_dev, *v))
                })
                .sum(),
            None => self.reference.aap + self.mean_dev.aap,
        }
    }

    fn cov_basis(&self, u: BasisVar, v: BasisVar) -> Complex64 {
        let u0 = var_value(&self.reference, u);
        let v0 = var_value(&self.reference, v);
        let du = var_value(&self.mean_dev, u);
        let dv = var_value(&self.mean_dev, v);
        let duv = prod_value(&self.mean_dev, u, v);
        duv - u0 * dv - v0 * du - du * dv + (prod_value(&self.reference, u, v) - u0 * v0)
    }

    fn cov_number_basis(&self, v: BasisVar) -> Result<Complex64, CoreError> {
        let (n_v0, dn_v) = match v {
            BasisVar::B => (self.reference.nb, self.mean_dev.nb),
            BasisVar::Bp => (self.reference.nbp, self.mean_dev.nbp),
            BasisVar::A | BasisVar::Ap => {
                return Err(CoreError::Domain {
                    context: "photon-number cross moments",
                    detail: "tracked against mirror variables only".into(),
                })
            }
        };
        let n0 = self.reference.aap;
        let v0 = var_value(&self.reference, v);
        let dn = self.mean_dev.aap;
        let dv = var_value(&self.mean_dev, v);
        Ok(dn_v - n0 * dv - v0 * dn - dn * dv + (n_v0 - n0 * v0))
    }

    fn cov_number_number(&self) -> Complex64 {
        let n0 = self.reference.aap;
        let dn = self.mean_dev.aap;
        self.mean_dev.nn - 2.0 * n0 * dn - dn * dn + (self.reference.nn - n0 * n0)
    }

    /// c-number covariance of two observables. Photon-number cross
    /// moments are tracked against mirror quadratures only.
    pub fn covariance(&self, u: Observable, v: Observable) -> Result<Complex64, CoreError> {
        match (quad_parts(u), quad_parts(v)) {
            (Some(pu), Some(pv)) => {
                let mut sum = Complex64::ZERO;
                for (uv, cu) in pu.iter() {
                    for (vv, cv) in pv.iter() {
                        sum += cu * cv * self.cov_basis(*uv, *vv);
                    }
                }
                Ok(sum)
            }
            (None, None) => Ok(self.cov_number_number()),
            (None, Some(pv)) | (Some(pv), None) => {
                let mut sum = Complex64::ZERO;
                for (vv, cv) in pv.iter() {
                    sum += cv * self.cov_number_basis(*vv)?;
                }
                Ok(sum)
            }
        }
    }

    /// Operator variance, including the vacuum term.
    pub fn operator_variance(&self, obs: Observable) -> Result<f64, CoreError> {
        let cov = self.covariance(obs, obs)?;
        Ok(match obs {
            Observable::PhotonNumber => cov.re + self.mean(obs).re,
            _ => 1.0 + cov.re,
        })
    }

    /// Largest relative imaginary defect over the nominally real means,
    /// variances and tracked covariances; a convergence diagnostic.
    pub fn hermitian_imag_max(&self) -> f64 {
        use Observable::*;
        let rel = |z: Complex64| z.im.abs() / (1.0 + z.norm());
        let mut worst = 0.0f64;
        for obs in [FieldAmplitude, FieldPhase, PhotonNumber, MirrorPosition, MirrorMomentum]
        {
            worst = worst.max(rel(self.mean(obs)));
            if let Ok(cov) = self.covariance(obs, obs) {
                worst = worst.max(rel(cov));
            }
        }
        for (u, v) in [
            (MirrorPosition, FieldAmplitude),
            (MirrorPosition, FieldPhase),
            (MirrorPosition, PhotonNumber),
            (FieldAmplitude, MirrorMomentum),
        ] {
            if let Ok(cov) = self.covariance(u, v) {
                worst = worst.max(rel(cov));
            }
        }
        worst
    }
}

/// Mirror readout in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorReadout {
    pub mean_x_m: f64,
    pub mean_momentum: f64,
    /// Operator variance of X_b (dimensionless, 1 = vacuum).
    pub position_variance: f64,
    /// Operator variance of Y_b (dimensionless, 1 = vacuum).
    pub momentum_variance: f64,
    /// A sqrt(V(X_b)); absent if the sampled variance is negative.
    pub sigma_x_m: Option<f64>,
    /// |B| sqrt(V(Y_b)); absent if the sampled variance is negative.
    pub sigma_momentum: Option<f64>,
}

/// Position and momentum statistics of the mirror.
pub fn mirror_position_momentum(
    stats: &MomentStats,
    params: &PhysicalParams,
) -> Result<MirrorReadout, CoreError> {
    let v_x = stats.operator_variance(Observable::MirrorPosition)?;
    let v_y = stats.operator_variance(Observable::MirrorMomentum)?;
    Ok(MirrorReadout {
        mean_x_m: params.position_scale_m * stats.mean(Observable::MirrorPosition).re,
        mean_momentum: params.momentum_scale * stats.mean(Observable::MirrorMomentum).re,
        position_variance: v_x,
        momentum_variance: v_y,
        sigma_x_m: (v_x >= 0.0).then(|| params.position_scale_m * v_x.sqrt()),
        sigma_momentum: (v_y >= 0.0).then(|| params.momentum_scale * v_y.sqrt()),
    })
}

/// Intracavity field statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldReadout {
    pub mean_photon_number: f64,
    pub v_amplitude: f64,
    pub v_phase: f64,
    pub v_photon_number: f64,
    /// V(N) / <N>; absent when the mean photon number is not positive.
    pub fano: Option<f64>,
}

/// Quadrature and number statistics of the cavity field.
pub fn field_variances(stats: &MomentStats) -> Result<FieldReadout, CoreError> {
    let mean_n = stats.mean(Observable::PhotonNumber).re;
    let v_n = stats.operator_variance(Observable::PhotonNumber)?;
    Ok(FieldReadout {
        mean_photon_number: mean_n,
        v_amplitude: stats.operator_variance(Observable::FieldAmplitude)?,
        v_phase: stats.operator_variance(Observable::FieldPhase)?,
        v_photon_number: v_n,
        fano: (mean_n > 0.0).then(|| v_n / mean_n),
    })
}

/// Normalised correlation coefficient between two observables.
pub fn correlation(
    stats: &MomentStats,
    u: Observable,
    v: Observable,
) -> Result<f64, CoreError> {
    if stats.count() < 2 {
        return Err(CoreError::InsufficientData(
            "correlation needs at least two trajectories".into(),
        ));
    }
    let vu = stats.operator_variance(u)?;
    let vv = stats.operator_variance(v)?;
    if vu <= 0.0 || vv <= 0.0 {
        return Err(CoreError::UndefinedCorrelation(format!(
            "operator variances {vu:.3e}, {vv:.3e} must both be positive"
        )));
    }
    Ok(stats.covariance(u, v)?.re / (vu * vv).sqrt())
}

/// Conditional inference of the mirror position from a field readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionInference {
    /// V(X_b) - Cov(X_b, F)^2 / V(F); never exceeds V(X_b).
    pub conditional_variance: f64,
    /// Optimal linear gain Cov(X_b, F) / V(F).
    pub gain: f64,
    /// A sqrt(V_inf); absent if the sampled conditional variance is negative.
    pub sigma_x_m: Option<f64>,
}

/// Inferred position uncertainty of the mirror given a field observable.
pub fn inferred_position_uncertainty(
    stats: &MomentStats,
    params: &PhysicalParams,
    via: Observable,
) -> Result<PositionInference, CoreError> {
    match via {
        Observable::FieldAmplitude | Observable::FieldPhase | Observable::PhotonNumber => {}
        _ => {
            return Err(CoreError::Domain {
                context: "position inference",
                detail: "readout must be a field observable".into(),
            })
        }
    }
    if stats.count() < 2 {
        return Err(CoreError::InsufficientData(
            "inference needs at least two trajectories".into(),
        ));
    }
    let v_via = stats.operator_variance(via)?;
    if v_via <= 0.0 {
        return Err(CoreError::UndefinedCorrelation(format!(
            "readout variance {v_via:.3e} must be positive"
        )));
    }
    let v_x = stats.operator_variance(Observable::MirrorPosition)?;
    let cov = stats.covariance(Observable::MirrorPosition, via)?.re;
    let conditional_variance = v_x - cov * cov / v_via;
    Ok(PositionInference {
        conditional_variance,
        gain: cov / v_via,
        sigma_x_m: (conditional_variance >= 0.0)
            .then(|| params.position_scale_m * conditional_variance.sqrt()),
    })
}

/// One reported value with its batch-resampled standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: Option<f64>,
    pub se: Option<f64>,
}

macro_rules! for_each_observable_column {
    ($apply:ident) => {
        $apply!(c_x_na);
        $apply!(c_x_xa);
        $apply!(c_x_ya);
        $apply!(c_xa_yb_sq);
        $apply!(fano);
        $apply!(mean_na);
        $apply!(mean_p);
        $apply!(mean_x);
        $apply!(sigma_inf_x_na);
        $apply!(sigma_inf_x_xa);
        $apply!(sigma_inf_x_ya);
        $apply!(sigma_p);
        $apply!(sigma_x);
        $apply!(v_na);
        $apply!(v_xa);
        $apply!(v_ya);
    };
}

/// All observables of one record time.
///
/// Names: `x`/`p` mirror position and momentum in SI units, `xa`/`ya`
/// field quadratures, `na` photon number, `v_*` operator variances, `c_*`
/// normalised correlations, `sigma_inf_x_*` the inferred position
/// uncertainty through the named field readout, `c_xa_yb_sq` the squared
/// position-momentum cross correlation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservablePoint {
    pub time_s: f64,
    pub c_x_na: Estimate,
    pub c_x_xa: Estimate,
    pub c_x_ya: Estimate,
    pub c_xa_yb_sq: Estimate,
    pub fano: Estimate,
    pub mean_na: Estimate,
    pub mean_p: Estimate,
    pub mean_x: Estimate,
    pub sigma_inf_x_na: Estimate,
    pub sigma_inf_x_xa: Estimate,
    pub sigma_inf_x_ya: Estimate,
    pub sigma_p: Estimate,
    pub sigma_x: Estimate,
    pub v_na: Estimate,
    pub v_xa: Estimate,
    pub v_ya: Estimate,
    /// Largest relative imaginary defect at this record.
    pub hermitian_imag_max: f64,
}

/// A report column: name paired with its accessor.
pub type ColumnAccessor = (&'static str, fn(&ObservablePoint) -> Estimate);

impl ObservablePoint {
    /// Column names in report order (lexicographic), paired with accessors.
    pub const COLUMNS: [ColumnAccessor; 16] = [
        ("c_x_na", |p| p.c_x_na),
        ("c_x_xa", |p| p.c_x_xa),
        ("c_x_ya", |p| p.c_x_ya),
        ("c_xa_yb_sq", |p| p.c_xa_yb_sq),
        ("fano", |p| p.fano),
        ("mean_na", |p| p.mean_na),
        ("mean_p", |p| p.mean_p),
        ("mean_x", |p| p.mean_x),
        ("sigma_inf_x_na", |p| p.sigma_inf_x_na),
        ("sigma_inf_x_xa", |p| p.sigma_inf_x_xa),
        ("sigma_inf_x_ya", |p| p.sigma_inf_x_ya),
        ("sigma_p", |p| p.sigma_p),
        ("sigma_x", |p| p.sigma_x),
        ("v_na", |p| p.v_na),
        ("v_xa", |p| p.v_xa),
        ("v_ya", |p| p.v_ya),
    ];
}

/// Raw (value-only) observables of one stats object.
#[derive(Debug, Clone, Copy, Default)]
struct PointValues {
    c_x_na: Option<f64>,
    c_x_xa: Option<f64>,
    c_x_ya: Option<f64>,
    c_xa_yb_sq: Option<f64>,
    fano: Option<f64>,
    mean_na: Option<f64>,
    mean_p: Option<f64>,
    mean_x: Option<f64>,
    sigma_inf_x_na: Option<f64>,
    sigma_inf_x_xa: Option<f64>,
    sigma_inf_x_ya: Option<f64>,
    sigma_p: Option<f64>,
    sigma_x: Option<f64>,
    v_na: Option<f64>,
    v_xa: Option<f64>,
    v_ya: Option<f64>,
    hermitian_imag_max: f64,
}

fn compute_values(stats: &MomentStats, params: &PhysicalParams) -> PointValues {
    use Observable::*;
    let mut out = PointValues::default();
    if let Ok(mirror) = mirror_position_momentum(stats, params) {
        out.mean_x = Some(mirror.mean_x_m);
        out.mean_p = Some(mirror.mean_momentum);
        out.sigma_x = mirror.sigma_x_m;
        out.sigma_p = mirror.sigma_momentum;
    }
    if let Ok(field) = field_variances(stats) {
        out.mean_na = Some(field.mean_photon_number);
        out.v_xa = Some(field.v_amplitude);
        out.v_ya = Some(field.v_phase);
        out.v_na = Some(field.v_photon_number);
        out.fano = field.fano;
    }
    out.c_x_xa = correlation(stats, MirrorPosition, FieldAmplitude).ok();
    out.c_x_ya = correlation(stats, MirrorPosition, FieldPhase).ok();
    out.c_x_na = correlation(stats, MirrorPosition, PhotonNumber).ok();
    out.c_xa_yb_sq = correlation(stats, FieldAmplitude, MirrorMomentum)
        .ok()
        .map(|c| c * c);
    out.sigma_inf_x_xa = inferred_position_uncertainty(stats, params, FieldAmplitude)
        .ok()
        .and_then(|inf| inf.sigma_x_m);
    out.sigma_inf_x_ya = inferred_position_uncertainty(stats, params, FieldPhase)
        .ok()
        .and_then(|inf| inf.sigma_x_m);
    out.sigma_inf_x_na = inferred_position_uncertainty(stats, params, PhotonNumber)
        .ok()
        .and_then(|inf| inf.sigma_x_m);
    out.hermitian_imag_max = stats.hermitian_imag_max();
    out
}

fn standard_error(values: &[f64]) -> Option<f64> {
    let b = values.len();
    if b < 2 {
        return None;
    }
    let bf = b as f64;
    let mean = values.iter().sum::<f64>() / bf;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (bf - 1.0);
    Some((var / bf).sqrt())
}

/// Observable time series of a full ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub points: Vec<ObservablePoint>,
    /// Largest relative imaginary defect over the whole series.
    pub hermitian_imag_max: f64,
    pub completed: usize,
    pub diverged: usize,
    pub degraded: bool,
}

/// Evaluates every observable, with standard errors taken over the run's
/// reduction batches. The Fano factor is reported only where the mean
/// photon number clears three standard errors of zero.
pub fn series(run: &EnsembleRun) -> ObservableSeries {
    let params = &run.params;
    let mut points = Vec::with_capacity(run.totals.len());
    let mut worst_imag = 0.0f64;
    for (r, total) in run.totals.iter().enumerate() {
        let mut point = ObservablePoint {
            time_s: run.times_s[r],
            ..ObservablePoint::default()
        };
        let reference = &run.reference[r];
        if let Ok(stats) = MomentStats::new(total, reference) {
            let values = compute_values(&stats, params);
            let batch_values: Vec<PointValues> = run
                .batches
                .iter()
                .filter_map(|batch| MomentStats::new(&batch[r], reference).ok())
                .map(|stats| compute_values(&stats, params))
                .collect();
            macro_rules! fill {
                ($field:ident) => {
                    let present: Vec<f64> = batch_values
                        .iter()
                        .filter_map(|v| v.$field)
                        .collect();
                    point.$field = Estimate {
                        value: values.$field,
                        se: standard_error(&present),
                    };
                };
            }
            for_each_observable_column!(fill);
            // Keep the Fano factor only when the photon number is resolved
            // away from zero.
            let na_floor = 3.0 * point.mean_na.se.unwrap_or(0.0);
            if !matches!(point.mean_na.value, Some(n) if n > na_floor) {
                point.fano = Estimate::default();
            }
            point.hermitian_imag_max = values.hermitian_imag_max;
            worst_imag = worst_imag.max(values.hermitian_imag_max);
        }
        points.push(point);
    }
    ObservableSeries {
        points,
        hermitian_imag_max: worst_imag,
        completed: run.completed(),
        diverged: run.diverged,
        degraded: run.degraded,
    }
}

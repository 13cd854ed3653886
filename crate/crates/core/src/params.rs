//! Device parameters and derived physical quantities.
//!
//! [`RawParams`] collects the experimentally quoted numbers for a pendular
//! cavity (mirror mass, cavity geometry, finesse, pump power, ...).
//! [`derive_params`] validates them and produces the rates and scales the
//! dynamics is written in:
//!
//! - cavity decay rate       gamma   = pi c / (2 F L)
//! - optical frequency       omega0  = 2 pi c / lambda
//! - optomechanical coupling g       = omega0 / L
//! - pump amplitude          epsilon = sqrt(gamma P / hbar omega0)
//! - mirror damping rate     gamma_m = omega_m / (2 Q)
//! - position scale          A       = sqrt(hbar / 2 m omega_m)
//! - momentum scale          |B|     = sqrt(hbar m omega_m / 2)
//! - thermal de Broglie      lambda_dB = hbar / sqrt(4 m k_B T)
//! - mean occupation         n_bar   = k_B T / (hbar omega_m)
//!
//! The mirror damping model is a high-temperature one; construction fails
//! when n_bar drops below a configurable validity floor.

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT};
use crate::error::CoreError;
use std::f64::consts::PI;

/// Default lower bound on k_B T / (hbar omega_m) accepted by [`derive_params`].
pub const DEFAULT_VALIDITY_FLOOR: f64 = 10.0;

/// Experimentally quoted device numbers, all SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    /// Oscillating mirror mass m (kg).
    pub mirror_mass_kg: f64,
    /// Mirror angular frequency omega_m (rad/s).
    pub mirror_angular_frequency: f64,
    /// Mechanical quality factor Q (dimensionless).
    pub quality_factor: f64,
    /// Cavity length L (m).
    pub cavity_length_m: f64,
    /// Cavity finesse F (dimensionless).
    pub finesse: f64,
    /// Pump laser wavelength lambda (m).
    pub wavelength_m: f64,
    /// Input pump power P (W), non-negative.
    pub laser_power_w: f64,
    /// Bath temperature T (K).
    pub temperature_k: f64,
    /// Cavity-pump detuning Delta (rad/s), sign free.
    pub detuning: f64,
}

/// Validated parameters with every derived quantity the dynamics needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// The inputs these values were derived from.
    pub raw: RawParams,
    /// Cavity amplitude decay rate gamma (1/s).
    pub cavity_decay_rate: f64,
    /// Optical angular frequency omega0 (rad/s).
    pub optical_angular_frequency: f64,
    /// Optomechanical coupling g = omega0 / L (1/(m s)).
    pub coupling: f64,
    /// Pump amplitude epsilon (1/s), real and non-negative.
    pub pump_amplitude: f64,
    /// Mirror energy damping rate gamma_m = omega_m / (2 Q) (1/s).
    pub mirror_damping_rate: f64,
    /// Mirror zero-point position scale A (m).
    pub position_scale_m: f64,
    /// Mirror zero-point momentum scale |B| (kg m/s).
    pub momentum_scale: f64,
    /// Thermal de Broglie wavelength hbar / sqrt(4 m k_B T) (m).
    pub thermal_de_broglie_m: f64,
    /// Classical mean occupation n_bar = k_B T / (hbar omega_m).
    pub mean_occupation: f64,
}

fn require_finite(field: &'static str, value: f64) -> Result<(), CoreError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CoreError::NotFinite { field, value })
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<(), CoreError> {
    require_finite(field, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(CoreError::NonPositive { field, value })
    }
}

/// Validates `raw` and derives all physical scales, using the default
/// high-temperature validity floor.
pub fn derive_params(raw: &RawParams) -> Result<PhysicalParams, CoreError> {
    derive_params_with_floor(raw, DEFAULT_VALIDITY_FLOOR)
}

/// Same as [`derive_params`] with an explicit validity floor on
/// k_B T / (hbar omega_m). A floor of zero disables the check; useful for
/// exploratory low-temperature inputs that the damping model only formally
/// supports.
pub fn derive_params_with_floor(
    raw: &RawParams,
    validity_floor: f64,
) -> Result<PhysicalParams, CoreError> {
    require_positive("mirror_mass_kg", raw.mirror_mass_kg)?;
    require_positive("mirror_angular_frequency", raw.mirror_angular_frequency)?;
    require_positive("quality_factor", raw.quality_factor)?;
    require_positive("cavity_length_m", raw.cavity_length_m)?;
    require_positive("finesse", raw.finesse)?;
    require_positive("wavelength_m", raw.wavelength_m)?;
    require_positive("temperature_k", raw.temperature_k)?;
    require_finite("laser_power_w", raw.laser_power_w)?;
    require_finite("detuning", raw.detuning)?;
    if raw.laser_power_w < 0.0 {
        return Err(CoreError::NonPositive {
            field: "laser_power_w",
            value: raw.laser_power_w,
        });
    }

    let omega_m = raw.mirror_angular_frequency;
    let mean_occupation = BOLTZMANN * raw.temperature_k / (HBAR * omega_m);
    if mean_occupation < validity_floor {
        return Err(CoreError::ValidityFloor {
            ratio: mean_occupation,
            floor: validity_floor,
        });
    }

    let cavity_decay_rate =
        PI * SPEED_OF_LIGHT / (2.0 * raw.finesse * raw.cavity_length_m);
    let optical_angular_frequency = 2.0 * PI * SPEED_OF_LIGHT / raw.wavelength_m;
    let coupling = optical_angular_frequency / raw.cavity_length_m;
    let pump_amplitude = (cavity_decay_rate * raw.laser_power_w
        / (HBAR * optical_angular_frequency))
        .sqrt();
    let mirror_damping_rate = 0.5 * omega_m / raw.quality_factor;
    let position_scale_m = (HBAR / (2.0 * raw.mirror_mass_kg * omega_m)).sqrt();
    let momentum_scale = (HBAR * raw.mirror_mass_kg * omega_m / 2.0).sqrt();
    let thermal_de_broglie_m =
        HBAR / (4.0 * raw.mirror_mass_kg * BOLTZMANN * raw.temperature_k).sqrt();

    Ok(PhysicalParams {
        raw: *raw,
        cavity_decay_rate,
        optical_angular_frequency,
        coupling,
        pump_amplitude,
        mirror_damping_rate,
        position_scale_m,
        momentum_scale,
        thermal_de_broglie_m,
        mean_occupation,
    })
}

impl PhysicalParams {
    /// Coefficient gamma_m (1 - 2 k_B T / hbar omega_m) entering the mirror
    /// noise; negative for any hot bath.
    pub fn thermal_diffusion_coefficient(&self) -> f64 {
        self.mirror_damping_rate * (1.0 - 2.0 * self.mean_occupation)
    }

    /// Returns a copy with the optomechanical coupling replaced.
    ///
    /// Diagnostic hook: `with_coupling(0.0)` decouples mirror and field so
    /// the field reduces to a damped pumped mode with exact coherent-state
    /// statistics.
    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }

    /// Returns a copy with the pump amplitude replaced (epsilon >= 0).
    pub fn with_pump_amplitude(&self, pump_amplitude: f64) -> Self {
        Self {
            pump_amplitude,
            ..*self
        }
    }
}

/// Bose-Einstein occupation (exp(hbar omega / k_B T) - 1)^-1.
///
/// Valid for T > 0 and omega > 0; underflows cleanly to 0 as T -> 0+.
pub fn planck_occupation(temperature_k: f64, omega: f64) -> Result<f64, CoreError> {
    require_positive("temperature_k", temperature_k)?;
    require_positive("omega", omega)?;
    let x = HBAR * omega / (BOLTZMANN * temperature_k);
    Ok(x.exp_m1().recip())
}

/// Quadrature variance formula 1 + 2 sqrt(pi) (k_B T / hbar omega)^(3/2),
/// from the ratio r = k_B T / (hbar omega).
///
/// This is a reference formula quoted for the thermal mirror state. It
/// disagrees with the Gaussian-integral result
/// [`thermal_quadrature_variance_gaussian`] for every r > 0; sampled thermal
/// ensembles follow the Gaussian result. Both are exposed so the discrepancy
/// stays visible.
pub fn thermal_quadrature_variance_paper_from_ratio(ratio: f64) -> Result<f64, CoreError> {
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(CoreError::Domain {
            context: "thermal_quadrature_variance_paper",
            detail: format!("ratio must be finite and non-negative, got {ratio}"),
        });
    }
    Ok(1.0 + 2.0 * PI.sqrt() * ratio.powf(1.5))
}

/// [`thermal_quadrature_variance_paper_from_ratio`] evaluated at
/// r = k_B T / (hbar omega).
pub fn thermal_quadrature_variance_paper(
    temperature_k: f64,
    omega: f64,
) -> Result<f64, CoreError> {
    require_positive("temperature_k", temperature_k)?;
    require_positive("omega", omega)?;
    thermal_quadrature_variance_paper_from_ratio(
        BOLTZMANN * temperature_k / (HBAR * omega),
    )
}

/// Gaussian-integral thermal quadrature variance 1 + 2 r with
/// r = k_B T / (hbar omega); this is what sampled thermal states realise.
pub fn thermal_quadrature_variance_gaussian_from_ratio(
    ratio: f64,
) -> Result<f64, CoreError> {
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(CoreError::Domain {
            context: "thermal_quadrature_variance_gaussian",
            detail: format!("ratio must be finite and non-negative, got {ratio}"),
        });
    }
    Ok(1.0 + 2.0 * ratio)
}

/// Classical equipartition position spread sqrt(k_B T / m omega^2) (m).
pub fn thermal_sigma_x(
    temperature_k: f64,
    mass_kg: f64,
    omega: f64,
) -> Result<f64, CoreError> {
    require_positive("temperature_k", temperature_k)?;
    require_positive("mass_kg", mass_kg)?;
    require_positive("omega", omega)?;
    Ok((BOLTZMANN * temperature_k / (mass_kg * omega * omega)).sqrt())
}

use crate::consts::HBAR;
use crate::error::{invalid, Result};

/// Heating rate in quanta per second, `q^2 S / (4 m hbar Omega)`, for a field
/// spectral density `s` in V^2 m^-2 Hz^-1, mass in kg, charge in C and
/// angular frequency in rad/s.
pub fn heating_rate(s: f64, mass: f64, charge: f64, omega: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return invalid(format!("spectral density must be non-negative, got {s}"));
    }
    for (name, v) in [("mass", mass), ("charge", charge.abs()), ("frequency", omega)] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    Ok(charge * charge * s / (4.0 * mass * HBAR * omega))
}

/// Absolute uncertainty of `S_cross / S_self` inferred from the two mode
/// heating rates, each known to relative precision `eps`.
///
/// Assumes equal mode frequencies, so `S_ratio = (G+ - G-) / (G+ + G-)` and
/// the frequency factors cancel.
pub fn ratio_uncertainty(gamma_plus: f64, gamma_minus: f64, eps: f64) -> Result<f64> {
    if !(gamma_plus >= 0.0 && gamma_minus >= 0.0 && eps >= 0.0) {
        return invalid("heating rates and eps must be non-negative");
    }
    let sum = gamma_plus + gamma_minus;
    if sum == 0.0 {
        return invalid("both heating rates are zero");
    }
    let ratio = (gamma_plus - gamma_minus) / sum;
    Ok(eps * (1.0 + ratio * ratio).sqrt() * gamma_plus.hypot(gamma_minus) / sum)
}

/// Correlation length `sqrt(D / Omega)` of diffusing surface species.
pub fn xi_from_diffusion(diffusion: f64, omega: f64) -> Result<f64> {
    if !(diffusion > 0.0 && omega > 0.0) {
        return invalid(format!("diffusion constant and frequency must be positive, got {diffusion}, {omega}"));
    }
    Ok((diffusion / omega).sqrt())
}

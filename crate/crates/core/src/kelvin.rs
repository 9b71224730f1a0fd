//! Kelvin function ker_0.

use nalgebra::Complex;
use std::f64::consts::PI;

use crate::consts::EULER_GAMMA;
use crate::error::{invalid, Result};

// Below this the ascending series is used, above it the asymptotic expansion.
const SPLIT: f64 = 8.0;

/// Kelvin function ker_0(x) = Re K_0(x e^{i pi/4}).
///
/// Rejects `x <= 0` (logarithmic singularity at the origin) and NaN.
pub fn kelvin_ker0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("ker0 needs a positive argument, got {x}"));
    }
    Ok(ker0_unchecked(x))
}

pub(crate) fn ker0_unchecked(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else if x < SPLIT {
        series(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut ber, mut bei, mut psi_sum) = (0.0, 0.0, 0.0);
    // t_n = q^n / (n!)^2 ; harmonic H_n
    let mut t = 1.0;
    let mut harmonic = 0.0;
    for n in 0..200usize {
        if n > 0 {
            t *= q / (n as f64 * n as f64);
            harmonic += 1.0 / n as f64;
        }
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 0 {
            ber += sign * t;
            psi_sum += sign * t * (harmonic - EULER_GAMMA);
        } else {
            bei += sign * t;
        }
        if n > 4 && t < 1e-18 {
            break;
        }
    }
    -(0.5 * x).ln() * ber + 0.25 * PI * bei + psi_sum
}

fn asymptotic(x: f64) -> f64 {
    let z = Complex::from_polar(x, 0.25 * PI);
    let mut a = Complex::new(1.0, 0.0);
    let mut sum = a;
    let mut prev = 1.0;
    for k in 1..60 {
        let m = (2 * k - 1) as f64;
        a = a * (-m * m / (8.0 * k as f64)) / z;
        let size = a.norm();
        if size > prev {
            break;
        }
        sum += a;
        prev = size;
        if size < 1e-17 {
            break;
        }
    }
    let pref = (PI / 2.0 / z).sqrt() * (-z).exp();
    (pref * sum).re
}

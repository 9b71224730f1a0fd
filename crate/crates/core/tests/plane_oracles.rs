//! Grid sums over a large square against integrals over the infinite plane.
//!
//! For y-oriented dipoles and x-motion the two-ion correlator over the full
//! plane is a Hankel integral,
//!   s12(l) = pi * int_0^inf k^3 e^{-2kd} fhat(k) [J0(kl) - J2(kl)] dk,
//! with fhat = 1 for uncorrelated dipoles and
//! fhat = 2 pi xi^2 / (1 + k^2 xi^2)^{3/2} for an exponential kernel.

use std::f64::consts::PI;
use trapnoise::analysis::{one_ion_noise, ScalingSetup};
use trapnoise::geometry::{build_grid, preset_geometry, Preset};
use trapnoise::noise::{noise_matrix, IonConfiguration};
use trapnoise::{Axis, CorrelationKernel, DipoleOrientation, SourceKind};

/// Bessel J_n by the trapezoid rule on its periodic integral representation.
fn bessel_j(n: i32, x: f64) -> f64 {
    let m = 256;
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + (n as f64 * PI - x * PI.sin()).cos());
    for i in 1..m {
        let t = i as f64 * h;
        s += (n as f64 * t - x * t.sin()).cos();
    }
    s * h / PI
}

fn hankel_s12(d: f64, l: f64, fhat: impl Fn(f64) -> f64) -> f64 {
    // Simpson on [0, 40/d]; e^{-80} makes the tail irrelevant.
    let upper = 40.0 / d;
    let n = 20_000;
    let h = upper / n as f64;
    let f = |k: f64| k.powi(3) * (-2.0 * k * d).exp() * fhat(k) * (bessel_j(0, k * l) - bessel_j(2, k * l));
    let mut s = f(0.0) + f(upper);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    PI * s * h / 3.0
}

#[test]
fn bessel_helper_spot_values() {
    assert!((bessel_j(0, 1.0) - 0.7651976865579666).abs() < 1e-13);
    assert!((bessel_j(2, 3.0) - 0.486_091_260_585_891).abs() < 1e-13);
}

#[test]
fn uncorrelated_cross_noise_matches_hankel_integral() {
    let d = 1.0;
    let grid = build_grid(&preset_geometry(Preset::PlaneSurrogate, d).unwrap(), 12.0).unwrap();
    let s_self = 3.0 * PI / 8.0;
    for l in [0.0, 0.5, 1.0, 1.7, 3.0] {
        let ions = IonConfiguration::pair(l, d, 0.0, Axis::X).unwrap();
        let m = noise_matrix(&ions, &grid, DipoleOrientation::Y, &CorrelationKernel::Uncorrelated, SourceKind::Dipole)
            .unwrap();
        let want = hankel_s12(d, l, |_| 1.0);
        assert!((m.get(0, 1) - want).abs() < 0.01 * s_self, "l = {l}: {} vs {want}", m.get(0, 1));
    }
}

#[test]
fn exponential_one_ion_noise_matches_hankel_integral() {
    let xi = 1.0;
    let fhat = |k: f64| 2.0 * PI * xi * xi / (1.0 + k * k * xi * xi).powf(1.5);
    // Correlations reach past a 20 d square when d << xi, so use a wider one.
    let mut setup = ScalingSetup::new(Axis::X, DipoleOrientation::Y, CorrelationKernel::Exponential { xi });
    setup.plane_factor = 80.0;
    setup.nodes_per_height = 6.0;
    for d in [0.05, 0.2, 1.0] {
        let got = one_ion_noise(&setup, d).unwrap();
        let want = hankel_s12(d, 0.0, fhat);
        assert!((got / want - 1.0).abs() < 0.002, "d = {d}: {got} vs {want}");
    }
}

#[test]
fn one_ion_plane_constants() {
    // d^4 * integral of g^2 over the plane, x-motion
    let want = [
        (DipoleOrientation::X, 9.0 * PI / 32.0),
        (DipoleOrientation::Y, 3.0 * PI / 8.0),
        (DipoleOrientation::Z, 3.0 * PI / 32.0),
    ];
    for (u, c) in want {
        let setup = ScalingSetup::new(Axis::X, u, CorrelationKernel::Uncorrelated);
        for d in [0.3, 1.0, 3.0] {
            let s = one_ion_noise(&setup, d).unwrap() * d.powi(4);
            assert!((s / c - 1.0).abs() < 0.01, "{u:?} d = {d}: {s} vs {c}");
        }
    }
}

#[test]
fn one_ion_y_and_z_motion_constants() {
    // z-motion mirrors x-motion with x and z exchanged. For y-motion and y
    // dipoles, d^4 * int (2d^2 - rho^2)^2 / R^10 dA = 3 pi / 4.
    let sx = ScalingSetup::new(Axis::X, DipoleOrientation::X, CorrelationKernel::Uncorrelated);
    let sz = ScalingSetup::new(Axis::Z, DipoleOrientation::Z, CorrelationKernel::Uncorrelated);
    let a = one_ion_noise(&sx, 1.0).unwrap();
    let b = one_ion_noise(&sz, 1.0).unwrap();
    assert!((a - b).abs() < 1e-12 * a);
    let sy = ScalingSetup::new(Axis::Y, DipoleOrientation::Y, CorrelationKernel::Uncorrelated);
    let c = one_ion_noise(&sy, 1.0).unwrap();
    assert!((c / (3.0 * PI / 4.0) - 1.0).abs() < 0.01, "{c}");
}

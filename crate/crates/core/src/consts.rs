//! CODATA 2018 constants (SI units).

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass in atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;
/// Atomic mass of calcium-40 in atomic mass units.
pub const CA40_ATOMIC_MASS_U: f64 = 39.962_590_863;

/// Mass of a singly ionised calcium-40 ion, kg.
pub const CA40_ION_MASS: f64 = (CA40_ATOMIC_MASS_U - ELECTRON_MASS_U) * ATOMIC_MASS_UNIT;

/// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
pub fn coulomb_constant() -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * EPSILON_0)
}

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

use serde::Serialize;
use std::fmt;

/// Dipole orientation inferred from which radial motions show a crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationClass {
    MuX,
    MuY,
    MuZ,
    /// Crossover only in z-motion: matches no single orientation.
    Inconsistent,
}

impl fmt::Display for OrientationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrientationClass::MuX => "mu_x",
            OrientationClass::MuY => "mu_y",
            OrientationClass::MuZ => "mu_z",
            OrientationClass::Inconsistent => "inconsistent",
        })
    }
}

/// Truth table over (crossover in y-motion, crossover in z-motion).
pub fn classify_orientation(y_crossover: bool, z_crossover: bool) -> OrientationClass {
    match (y_crossover, z_crossover) {
        (true, true) => OrientationClass::MuX,
        (true, false) => OrientationClass::MuY,
        (false, false) => OrientationClass::MuZ,
        (false, true) => OrientationClass::Inconsistent,
    }
}

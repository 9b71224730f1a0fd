//! Field functions of single surface sources and spatial correlation kernels.
//!
//! Coordinates: the electrode is the plane y = 0, an ion sits at `(x, d, z)`
//! with `d > 0`, and a source at `(x_d, 0, z_d)`. Relative coordinates are
//! `xd = x_d - x_ion`, `zd = z_d - z_ion` and `R^2 = d^2 + xd^2 + zd^2`.
//!
//! A dipole with unit moment `u` produces the potential `phi = u.R / R^3` at
//! the ion, with `R` pointing from the ion to the dipole. The field functions
//! returned here are `-d(phi)/d(n)` for a small ion displacement along `n`,
//! i.e. the field component along the motion axis with `1/(4 pi eps0)` and the
//! dipole strength dropped.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::kelvin::ker0_unchecked;

/// Ion motion direction. `Y` is normal to the electrode plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => invalid(format!("unknown axis '{other}' (expected x, y or z)")),
        }
    }
}

/// Unit dipole direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleOrientation([f64; 3]);

impl DipoleOrientation {
    pub const X: DipoleOrientation = DipoleOrientation([1.0, 0.0, 0.0]);
    pub const Y: DipoleOrientation = DipoleOrientation([0.0, 1.0, 0.0]);
    pub const Z: DipoleOrientation = DipoleOrientation([0.0, 0.0, 1.0]);

    /// Normalizes `(ux, uy, uz)`; the zero vector and non-finite input are rejected.
    pub fn new(ux: f64, uy: f64, uz: f64) -> Result<Self> {
        let n = (ux * ux + uy * uy + uz * uz).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return invalid(format!("dipole orientation ({ux}, {uy}, {uz}) cannot be normalized"));
        }
        Ok(DipoleOrientation([ux / n, uy / n, uz / n]))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// Short label: `x`, `y`, `z` for the axes, otherwise the components.
    pub fn label(&self) -> String {
        match self.0 {
            [1.0, 0.0, 0.0] => "x".into(),
            [0.0, 1.0, 0.0] => "y".into(),
            [0.0, 0.0, 1.0] => "z".into(),
            [a, b, c] => format!("{a:.4}_{b:.4}_{c:.4}"),
        }
    }
}

impl<'de> Deserialize<'de> for DipoleOrientation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(de)?;
        DipoleOrientation::new(v[0], v[1], v[2]).map_err(serde::de::Error::custom)
    }
}

/// What populates the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Dipole,
    Monopole,
}

fn check_height(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        invalid(format!("ion height must be positive, got {d}"))
    }
}

/// Field function of a unit dipole at `dipole = (x_d, z_d)` seen by an ion at
/// `ion = (x, d, z)`, for motion along `axis`.
pub fn dipole_g(axis: Axis, orientation: DipoleOrientation, ion: [f64; 3], dipole: [f64; 2]) -> Result<f64> {
    check_height(ion[1])?;
    Ok(dipole_rel(axis, &orientation.0, ion[1], dipole[0] - ion[0], dipole[1] - ion[2]))
}

/// Field function of a unit point charge at `source = (x_d, z_d)`: the
/// derivative of `1/R` with respect to the ion position along `axis`.
///
/// With this sign a source directly below the ion gives `-1/d^2` for y-motion.
pub fn monopole_g(axis: Axis, ion: [f64; 3], source: [f64; 2]) -> Result<f64> {
    check_height(ion[1])?;
    Ok(monopole_rel(axis, ion[1], source[0] - ion[0], source[1] - ion[2]))
}

#[inline]
pub(crate) fn dipole_rel(axis: Axis, u: &[f64; 3], d: f64, xd: f64, zd: f64) -> f64 {
    let (d2, x2, z2) = (d * d, xd * xd, zd * zd);
    let r2 = d2 + x2 + z2;
    let inv5 = 1.0 / (r2 * r2 * r2.sqrt());
    let [ux, uy, uz] = *u;
    let num = match axis {
        Axis::X => ux * (d2 - 2.0 * x2 + z2) + uy * 3.0 * d * xd - uz * 3.0 * xd * zd,
        Axis::Y => ux * 3.0 * d * xd - uy * (2.0 * d2 - x2 - z2) + uz * 3.0 * d * zd,
        Axis::Z => -ux * 3.0 * xd * zd + uy * 3.0 * d * zd + uz * (d2 + x2 - 2.0 * z2),
    };
    num * inv5
}

#[inline]
pub(crate) fn monopole_rel(axis: Axis, d: f64, xd: f64, zd: f64) -> f64 {
    let r2 = d * d + xd * xd + zd * zd;
    let inv3 = 1.0 / (r2 * r2.sqrt());
    match axis {
        Axis::X => xd * inv3,
        Axis::Y => -d * inv3,
        Axis::Z => zd * inv3,
    }
}

/// Field function for either source kind; `u` is ignored for monopoles.
#[inline]
pub(crate) fn source_rel(kind: SourceKind, axis: Axis, u: &[f64; 3], d: f64, xd: f64, zd: f64) -> f64 {
    match kind {
        SourceKind::Dipole => dipole_rel(axis, u, d, xd, zd),
        SourceKind::Monopole => monopole_rel(axis, d, xd, zd),
    }
}

/// Smallest admissible value of ker_0 at the clamp radius. It is the depth of
/// the global minimum of ker_0, so the normalized kernel stays in [-1, 1].
pub const KER0_MIN_NORM: f64 = 0.0711;

/// Spatial correlation of dipole fluctuations between two surface points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationKernel {
    /// Delta-correlated dipoles.
    #[default]
    Uncorrelated,
    /// `exp(-r / xi)`.
    Exponential { xi: f64 },
    /// `sin(r / xi) / (r / xi)`.
    Sinc { xi: f64 },
    /// `ker_0(r / xi) / ker_0(r_min / xi)` for `r >= r_min`, 1 below.
    /// Leaving `r_min` unset uses the grid cell diagonal.
    KelvinKer0 {
        xi: f64,
        #[serde(default)]
        r_min: Option<f64>,
    },
    /// Voronoi patches: 1 inside a patch, 0 across patches.
    Patch { patch_scale: f64, seed: u64 },
}

/// Translation-invariant kernel profile ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Profile {
    Exponential { inv_xi: f64 },
    Sinc { inv_xi: f64 },
    Ker0 { inv_xi: f64, r_min: f64, inv_norm: f64 },
}

impl Profile {
    #[inline]
    pub(crate) fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Exponential { inv_xi } => (-r * inv_xi).exp(),
            Profile::Sinc { inv_xi } => sinc(r * inv_xi),
            Profile::Ker0 { inv_xi, r_min, inv_norm } => {
                if r < r_min {
                    1.0
                } else {
                    ker0_unchecked(r * inv_xi) * inv_norm
                }
            }
        }
    }
}

#[inline]
fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        invalid(format!("correlation length must be positive, got {xi}"))
    }
}

impl CorrelationKernel {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationKernel::Uncorrelated => "uncorrelated",
            CorrelationKernel::Exponential { .. } => "exponential",
            CorrelationKernel::Sinc { .. } => "sinc",
            CorrelationKernel::KelvinKer0 { .. } => "kelvin_ker0",
            CorrelationKernel::Patch { .. } => "patch",
        }
    }

    /// Correlation length, when the kernel has one.
    pub fn xi(&self) -> Option<f64> {
        match *self {
            CorrelationKernel::Exponential { xi }
            | CorrelationKernel::Sinc { xi }
            | CorrelationKernel::KelvinKer0 { xi, .. } => Some(xi),
            CorrelationKernel::Patch { patch_scale, .. } => Some(patch_scale),
            CorrelationKernel::Uncorrelated => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CorrelationKernel::Uncorrelated => Ok(()),
            CorrelationKernel::Exponential { xi } | CorrelationKernel::Sinc { xi } => check_xi(xi),
            CorrelationKernel::KelvinKer0 { xi, r_min } => {
                check_xi(xi)?;
                match r_min {
                    Some(r) if !(r > 0.0 && r.is_finite()) => {
                        invalid(format!("ker0 clamp radius must be positive, got {r}"))
                    }
                    _ => Ok(()),
                }
            }
            CorrelationKernel::Patch { patch_scale, .. } => {
                if patch_scale > 0.0 && patch_scale.is_finite() {
                    Ok(())
                } else {
                    invalid(format!("patch scale must be positive, got {patch_scale}"))
                }
            }
        }
    }

    /// Profile for the translation-invariant kinds; `cell_diagonal` supplies
    /// the ker_0 clamp radius when none was given. `None` for uncorrelated
    /// and patch kernels.
    pub(crate) fn profile(&self, cell_diagonal: f64) -> Result<Option<Profile>> {
        self.validate()?;
        Ok(match *self {
            CorrelationKernel::Uncorrelated | CorrelationKernel::Patch { .. } => None,
            CorrelationKernel::Exponential { xi } => Some(Profile::Exponential { inv_xi: 1.0 / xi }),
            CorrelationKernel::Sinc { xi } => Some(Profile::Sinc { inv_xi: 1.0 / xi }),
            CorrelationKernel::KelvinKer0 { xi, r_min } => {
                let r_min = r_min.unwrap_or(cell_diagonal);
                let norm = ker0_unchecked(r_min / xi);
                if !(norm >= KER0_MIN_NORM) {
                    return invalid(format!(
                        "ker0 kernel: clamp radius {r_min} is too large for xi = {xi} \
                         (ker0(r_min/xi) = {norm:.4} < {KER0_MIN_NORM}); refine the grid or raise xi"
                    ));
                }
                Some(Profile::Ker0 { inv_xi: 1.0 / xi, r_min, inv_norm: 1.0 / norm })
            }
        })
    }
}

/// Kernel value at separation `r`. Patch kernels need the two patch labels.
///
/// The uncorrelated kernel is a same-point identity: 1 at `r = 0`, else 0.
/// `kelvin_ker0` requires an explicit `r_min` here.
pub fn corr_kernel(kernel: &CorrelationKernel, r: f64, patch_ids: Option<(u32, u32)>) -> Result<f64> {
    if !(r >= 0.0) {
        return invalid(format!("separation must be non-negative, got {r}"));
    }
    match *kernel {
        CorrelationKernel::Uncorrelated => Ok(if r == 0.0 { 1.0 } else { 0.0 }),
        CorrelationKernel::Patch { .. } => {
            kernel.validate()?;
            match patch_ids {
                Some((a, b)) => Ok(if a == b { 1.0 } else { 0.0 }),
                None => invalid("patch kernel needs the patch labels of both points"),
            }
        }
        CorrelationKernel::KelvinKer0 { r_min: None, .. } => {
            invalid("kelvin_ker0 kernel needs r_min outside a grid context")
        }
        _ => Ok(kernel.profile(f64::NAN)?.expect("translation-invariant kernel").eval(r)),
    }
}

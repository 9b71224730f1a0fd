//! Electrode surfaces in the y = 0 plane and their discretisation.
//!
//! Every length here is in dimensionless simulation units. The only place a
//! physical length scale enters is the heating-rate conversion.

mod grid;
mod patches;

pub use grid::{build_grid, build_refined_grid, Lattice, QuadratureGrid, DEFAULT_NODES_PER_HEIGHT};
pub use patches::{make_patch_map, PatchMap};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// A planar electrode region lying in the y = 0 plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Rectangle {
        x_min: f64,
        x_max: f64,
        z_min: f64,
        z_max: f64,
    },
    Disk {
        center_x: f64,
        center_z: f64,
        radius: f64,
    },
    Annulus {
        center_x: f64,
        center_z: f64,
        r_inner: f64,
        r_outer: f64,
    },
}

impl Region {
    pub fn rectangle(x_min: f64, x_max: f64, z_min: f64, z_max: f64) -> Self {
        Region::Rectangle { x_min, x_max, z_min, z_max }
    }

    pub fn disk(center_x: f64, center_z: f64, radius: f64) -> Self {
        Region::Disk { center_x, center_z, radius }
    }

    pub fn annulus(center_x: f64, center_z: f64, r_inner: f64, r_outer: f64) -> Self {
        Region::Annulus { center_x, center_z, r_inner, r_outer }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Rectangle { x_min, x_max, z_min, z_max } => (x_max - x_min) * (z_max - z_min),
            Region::Disk { radius, .. } => PI * radius * radius,
            Region::Annulus { r_inner, r_outer, .. } => PI * (r_outer * r_outer - r_inner * r_inner),
        }
    }

    /// Axis-aligned bounding box as `(x_min, x_max, z_min, z_max)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        match *self {
            Region::Rectangle { x_min, x_max, z_min, z_max } => (x_min, x_max, z_min, z_max),
            Region::Disk { center_x, center_z, radius: r }
            | Region::Annulus { center_x, center_z, r_outer: r, .. } => {
                (center_x - r, center_x + r, center_z - r, center_z + r)
            }
        }
    }

    /// Closed-set membership test.
    pub fn contains(&self, x: f64, z: f64) -> bool {
        self.contains_with_margin(x, z, 0.0)
    }

    /// Membership with the boundary pulled inwards by `margin`.
    fn contains_with_margin(&self, x: f64, z: f64, margin: f64) -> bool {
        match *self {
            Region::Rectangle { x_min, x_max, z_min, z_max } => {
                x >= x_min + margin && x <= x_max - margin && z >= z_min + margin && z <= z_max - margin
            }
            Region::Disk { center_x, center_z, radius } => {
                (x - center_x).hypot(z - center_z) <= radius - margin
            }
            Region::Annulus { center_x, center_z, r_inner, r_outer } => {
                let rho = (x - center_x).hypot(z - center_z);
                rho >= r_inner + margin && rho <= r_outer - margin
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = match *self {
            Region::Rectangle { x_min, x_max, z_min, z_max } => [x_min, x_max, z_min, z_max].iter().all(|v| v.is_finite()),
            Region::Disk { center_x, center_z, radius } => [center_x, center_z, radius].iter().all(|v| v.is_finite()),
            Region::Annulus { center_x, center_z, r_inner, r_outer } => {
                [center_x, center_z, r_inner, r_outer].iter().all(|v| v.is_finite()) && r_inner >= 0.0
            }
        };
        if !finite {
            return Err(Error::Geometry(format!("region {self:?} has non-finite or negative extents")));
        }
        if !(self.area() > 0.0) {
            return Err(Error::Geometry(format!("region {self:?} has zero area")));
        }
        Ok(())
    }
}

/// A set of non-overlapping dipole-bearing regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeGeometry {
    regions: Vec<Region>,
}

impl ElectrodeGeometry {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Geometry("geometry has no regions (zero area)".into()));
        }
        for r in &regions {
            r.validate()?;
        }
        for i in 0..regions.len() {
            for j in (i + 1)..regions.len() {
                if overlaps(&regions[i], &regions[j]) {
                    return Err(Error::Geometry(format!("regions {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn total_area(&self) -> f64 {
        self.regions.iter().map(Region::area).sum()
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.regions.iter().map(Region::bbox).fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3)),
        )
    }

    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (x0, x1, z0, z1) = self.bbox();
        (x1 - x0).hypot(z1 - z0)
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        self.regions.iter().any(|r| r.contains(x, z))
    }
}

/// Sampled overlap test: two regions overlap if some point of a fine grid over
/// their common bounding box sits strictly inside both.
fn overlaps(a: &Region, b: &Region) -> bool {
    let (ax0, ax1, az0, az1) = a.bbox();
    let (bx0, bx1, bz0, bz1) = b.bbox();
    let (x0, x1, z0, z1) = (ax0.max(bx0), ax1.min(bx1), az0.max(bz0), az1.min(bz1));
    if x0 >= x1 || z0 >= z1 {
        return false;
    }
    if let (Region::Rectangle { .. }, Region::Rectangle { .. }) = (a, b) {
        return true;
    }
    let scale = (x1 - x0).max(z1 - z0);
    let margin = 1e-9 * scale.max(1.0);
    const N: usize = 128;
    (0..N).any(|i| {
        let x = x0 + (i as f64 + 0.5) * (x1 - x0) / N as f64;
        (0..N).any(|k| {
            let z = z0 + (k as f64 + 0.5) * (z1 - z0) / N as f64;
            a.contains_with_margin(x, z, margin) && b.contains_with_margin(x, z, margin)
        })
    })
}

/// Named electrode layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Square of side 20 x scale centred under the ion midpoint.
    PlaneSurrogate,
    /// Two long RF rails of a segmented surface trap.
    SegmentedTrap,
    /// A single square electrode of side `scale`.
    Square,
    /// Disk of radius `scale` with a concentric ring from 3R to 5R.
    Stylus,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::PlaneSurrogate, Preset::SegmentedTrap, Preset::Square, Preset::Stylus];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PlaneSurrogate => "plane_surrogate",
            Preset::SegmentedTrap => "segmented_trap",
            Preset::Square => "square",
            Preset::Stylus => "stylus",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown geometry preset '{s}'")))
    }
}

/// Side of the plane surrogate in units of the scale (ion height).
pub const PLANE_SURROGATE_FACTOR: f64 = 20.0;

/// Length of the segmented-trap rails in units of the rail width L_z.
pub const SEGMENTED_LENGTH_RATIO: f64 = 10.0;

/// Build a named layout. See [`segmented_trap`] for the rail placement.
pub fn preset_geometry(preset: Preset, scale: f64) -> Result<ElectrodeGeometry> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("preset scale must be positive, got {scale}")));
    }
    match preset {
        Preset::PlaneSurrogate => plane_surrogate(scale, PLANE_SURROGATE_FACTOR),
        Preset::SegmentedTrap => segmented_trap(scale, 0.0),
        Preset::Square => {
            let h = 0.5 * scale;
            ElectrodeGeometry::new(vec![Region::rectangle(-h, h, -h, h)])
        }
        Preset::Stylus => ElectrodeGeometry::new(vec![
            Region::disk(0.0, 0.0, scale),
            Region::annulus(0.0, 0.0, 3.0 * scale, 5.0 * scale),
        ]),
    }
}

/// Square of side `factor * scale` centred on the origin.
pub fn plane_surrogate(scale: f64, factor: f64) -> Result<ElectrodeGeometry> {
    let h = 0.5 * factor * scale;
    ElectrodeGeometry::new(vec![Region::rectangle(-h, h, -h, h)])
}

/// Two RF rails of length 10 L_z along x, centred on x = 0.
///
/// Rail A has width L_z and starts at `z = strip_offset`; rail B has width
/// 2 L_z and spans `z in [-3 L_z, -L_z]`. With the default offset of zero the
/// ion axis (z = 0) runs along the inner edge of rail A.
pub fn segmented_trap(l_z: f64, strip_offset: f64) -> Result<ElectrodeGeometry> {
    if !(l_z > 0.0) {
        return Err(Error::InvalidInput(format!("rail width must be positive, got {l_z}")));
    }
    let half = 0.5 * SEGMENTED_LENGTH_RATIO * l_z;
    ElectrodeGeometry::new(vec![
        Region::rectangle(-half, half, strip_offset, strip_offset + l_z),
        Region::rectangle(-half, half, -3.0 * l_z, -l_z),
    ])
}

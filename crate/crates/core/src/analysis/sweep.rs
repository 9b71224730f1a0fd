use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{build_grid, make_patch_map, ElectrodeGeometry, QuadratureGrid};
use crate::kernels::{Axis, CorrelationKernel, DipoleOrientation, SourceKind};
use crate::noise::{self_cross, IonConfiguration, NoiseEngine, NoiseOptions, SelfCross};

/// Everything needed to evaluate two-ion noise at one separation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSetup {
    pub geometry: ElectrodeGeometry,
    pub axis: Axis,
    pub orientation: DipoleOrientation,
    pub kernel: CorrelationKernel,
    pub source: SourceKind,
    /// Ion height d.
    pub height: f64,
    /// z of the ion axis.
    pub ion_z: f64,
    /// Grid nodes per unit length.
    pub resolution: f64,
    pub options: NoiseOptions,
}

impl PairSetup {
    /// Uncorrelated dipoles, ion axis at z = 0, default grid density for `height`.
    pub fn new(geometry: ElectrodeGeometry, axis: Axis, orientation: DipoleOrientation, height: f64) -> Self {
        PairSetup {
            geometry,
            axis,
            orientation,
            kernel: CorrelationKernel::Uncorrelated,
            source: SourceKind::Dipole,
            height,
            ion_z: 0.0,
            resolution: crate::geometry::DEFAULT_NODES_PER_HEIGHT / height,
            options: NoiseOptions::default(),
        }
    }

    pub fn with_kernel(mut self, kernel: CorrelationKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_source(mut self, source: SourceKind) -> Self {
        self.source = source;
        self
    }

    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_orientation(mut self, orientation: DipoleOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_ion_z(mut self, z: f64) -> Self {
        self.ion_z = z;
        self
    }

    /// Grid for this setup, with patch labels attached for patch kernels.
    pub fn grid(&self) -> Result<QuadratureGrid> {
        prepare_grid(&self.geometry, self.resolution, &self.kernel)
    }

    /// Two-ion decomposition at separation `l` and the setup's height.
    pub fn evaluate(&self, separation: f64) -> Result<SelfCross> {
        let grid = self.grid()?;
        let engine = NoiseEngine::new(&grid, &self.kernel, &self.options)?;
        self.evaluate_with(&engine, separation, self.height)
    }

    pub(crate) fn evaluate_with(&self, engine: &NoiseEngine<'_>, separation: f64, height: f64) -> Result<SelfCross> {
        let ions = IonConfiguration::pair(separation, height, self.ion_z, self.axis)?;
        self_cross(&engine.matrix(&ions, self.orientation, self.source)?)
    }
}

/// Grid over `geometry`, carrying a patch map when the kernel needs one.
pub fn prepare_grid(geometry: &ElectrodeGeometry, resolution: f64, kernel: &CorrelationKernel) -> Result<QuadratureGrid> {
    let grid = build_grid(geometry, resolution)?;
    match *kernel {
        CorrelationKernel::Patch { patch_scale, seed } => {
            let map = make_patch_map(geometry, &grid, patch_scale, seed)?;
            grid.with_patches(&map)
        }
        _ => Ok(grid),
    }
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Rows are indexed by `l / d`.
    #[default]
    IonSeparation,
    /// Rows are indexed by `d`; the separation stays fixed.
    IonHeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: f64,
    pub s_self: f64,
    pub s_cross: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub variable: SweepVariable,
    pub axis: Axis,
    pub orientation: [f64; 3],
    pub source: SourceKind,
    pub kernel: CorrelationKernel,
    pub height: f64,
    pub resolution: f64,
    pub grid_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

impl SweepResult {
    pub fn min_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)
    }

    /// Number of sign changes of `S_cross` between consecutive rows.
    pub fn sign_changes(&self) -> usize {
        self.rows.windows(2).filter(|w| (w[0].s_cross > 0.0) != (w[1].s_cross > 0.0)).count()
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return invalid(format!("range must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
    }
    if points < 2 {
        return invalid(format!("a sweep needs at least two points, got {points}"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| match i {
            0 => lo,
            i if i == points - 1 => hi,
            i => (a + (b - a) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect())
}

/// Log-spaced two-ion sweep. For `IonSeparation` the range is in units of
/// the setup height and rows carry `l / d`; for `IonHeight` the separation is
/// `fixed_separation` and rows carry `d`.
pub fn ratio_sweep(
    setup: &PairSetup,
    variable: SweepVariable,
    range: (f64, f64),
    points: usize,
    fixed_separation: f64,
) -> Result<SweepResult> {
    let xs = log_space(range.0, range.1, points)?;
    let grid = setup.grid()?;
    let engine = NoiseEngine::new(&grid, &setup.kernel, &setup.options)?;
    let rows = xs
        .par_iter()
        .map(|&x| {
            let sc = match variable {
                SweepVariable::IonSeparation => setup.evaluate_with(&engine, x * setup.height, setup.height)?,
                SweepVariable::IonHeight => setup.evaluate_with(&engine, fixed_separation, x)?,
            };
            Ok(SweepRow { variable: x, s_self: sc.s_self, s_cross: sc.s_cross, ratio: sc.ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        meta: SweepMeta {
            variable,
            axis: setup.axis,
            orientation: setup.orientation.components(),
            source: setup.source,
            kernel: setup.kernel,
            height: setup.height,
            resolution: setup.resolution,
            grid_nodes: grid.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset_geometry, Preset};

    #[test]
    fn log_space_endpoints_exact() {
        let v = log_space(0.1, 10.0, 5).unwrap();
        assert_eq!(v[0], 0.1);
        assert_eq!(v[4], 10.0);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(log_space(1.0, 1.0, 5).is_err());
        assert!(log_space(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn separation_sweep_rows_are_bounded_and_ordered() {
        let setup = PairSetup::new(preset_geometry(Preset::PlaneSurrogate, 1.0).unwrap(), Axis::X, DipoleOrientation::Y, 1.0)
            .with_resolution(3.0);
        let r = ratio_sweep(&setup, SweepVariable::IonSeparation, (0.1, 10.0), 9, 0.0).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r.rows.iter().all(|row| row.ratio.abs() <= 1.0 + 1e-9));
        assert!(r.rows.windows(2).all(|w| w[1].variable > w[0].variable));
        assert!(r.rows[0].ratio > 0.9);
        assert_eq!(r.sign_changes(), 1);
    }

    #[test]
    fn height_sweep_reaches_common_bath_far_away() {
        let setup = PairSetup::new(preset_geometry(Preset::Square, 1.0).unwrap(), Axis::Y, DipoleOrientation::Y, 1.0)
            .with_resolution(8.0);
        let r = ratio_sweep(&setup, SweepVariable::IonHeight, (0.5, 20.0), 4, 0.2).unwrap();
        assert!(r.rows.last().unwrap().ratio > 0.99);
    }
}

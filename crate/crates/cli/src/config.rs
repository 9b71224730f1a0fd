//! Run configuration. Every section and key is optional; missing values take
//! the defaults documented on each field. Unknown keys are errors.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use trapnoise::analysis::SweepVariable;
use trapnoise::geometry::{preset_geometry, segmented_trap, ElectrodeGeometry, Preset, Region, DEFAULT_NODES_PER_HEIGHT};
use trapnoise::{Axis, CorrelationKernel, DipoleOrientation, SourceKind};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub ions: IonsConfig,
    pub dipoles: DipolesConfig,
    pub kernel: CorrelationKernel,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub scaling: ScalingConfig,
    pub chain: ChainConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

/// Either a named preset (default `plane_surrogate`) or explicit regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub preset: Option<Preset>,
    /// Preset length scale: the ion height for `plane_surrogate`, L_z for
    /// `segmented_trap`, the side for `square`, R for `stylus`. Default 1.
    pub scale: f64,
    /// z of the lower edge of the first segmented-trap rail. Default 0.
    pub strip_offset: f64,
    pub regions: Option<Vec<Region>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { preset: None, scale: 1.0, strip_offset: 0.0, regions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonsConfig {
    /// Ion height d. Default 1.
    pub height: f64,
    /// z of the ion axis. Default 0.
    pub z: f64,
    /// Motion axes to evaluate. Default `["x"]`.
    pub axes: Vec<Axis>,
}

impl Default for IonsConfig {
    fn default() -> Self {
        IonsConfig { height: 1.0, z: 0.0, axes: vec![Axis::X] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipolesConfig {
    /// Dipole directions, normalized on use. Default `[[0, 1, 0]]`.
    pub orientations: Vec<[f64; 3]>,
    /// `dipole` (default) or `monopole`.
    pub source: SourceKind,
}

impl Default for DipolesConfig {
    fn default() -> Self {
        DipolesConfig { orientations: vec![[0.0, 1.0, 0.0]], source: SourceKind::Dipole }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Nodes per unit length. Default 12 / height.
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `ion_separation` (default; values are l/d) or `ion_height` (values are d).
    pub variable: SweepVariable,
    /// Default `[0.1, 10]`.
    pub range: [f64; 2],
    /// Default 41.
    pub points: usize,
    /// Ion separation held fixed in `ion_height` sweeps. Default 1.
    pub separation: f64,
    /// Locate the first sign change of S_cross (separation sweeps only).
    /// Default true.
    pub crossover: bool,
    /// Crossover search bracket in units of l/d. Default `[0.3, 10]`.
    pub bracket: [f64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            variable: SweepVariable::IonSeparation,
            range: [0.1, 10.0],
            points: 41,
            separation: 1.0,
            crossover: true,
            bracket: [0.3, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    /// Heights d. Default `[0.1, 10]`.
    pub range: [f64; 2],
    /// Default 21.
    pub points: usize,
    /// Points per local-slope window. Default 5.
    pub window: usize,
    /// Grid cells per ion height. Default 12.
    pub nodes_per_height: f64,
    /// Plane side in units of d. Default 20.
    pub plane_factor: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            range: [0.1, 10.0],
            points: 21,
            window: 5,
            nodes_per_height: DEFAULT_NODES_PER_HEIGHT,
            plane_factor: trapnoise::geometry::PLANE_SURROGATE_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    /// Default 10.
    pub ions: usize,
    /// Ion spacings. Default `[1e-3, 1]`.
    pub spacing_range: [f64; 2],
    /// Default 31.
    pub points: usize,
    /// Coulomb coupling relative to the trap stiffness. Default 100.
    pub coupling: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { ions: 10, spacing_range: [1e-3, 1.0], points: 31, coupling: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Default 20000.
    pub samples: usize,
    /// Default 1.
    pub seed: u64,
    /// Ion separation of the checked pair. Default 1.
    pub separation: f64,
    /// Entries with |z| above this fail. Default 3.
    pub z_threshold: f64,
    /// Fraction of entries that must pass. Default 0.95.
    pub min_pass_fraction: f64,
    /// Negate the first ion's field functions inside the sampler. Default false.
    pub inject_sign_fault: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            samples: 20_000,
            seed: 1,
            separation: 1.0,
            z_threshold: 3.0,
            min_pass_fraction: 0.95,
            inject_sign_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Default `out`.
    pub dir: PathBuf,
    /// File name prefix. Default `run`.
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), prefix: "run".into() }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string().replace('\n', " ")))
    }

    /// Load a TOML config, or the `config` member of a JSON sidecar.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Sidecar {
                config: RunConfig,
            }
            let s: Sidecar = serde_json::from_str(&text).map_err(config_err)?;
            Ok(s.config)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Fill derived defaults so the config fully specifies the run, then check it.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.grid.resolution.is_none() {
            self.grid.resolution = Some(DEFAULT_NODES_PER_HEIGHT / self.ions.height);
        }
        if self.geometry.preset.is_none() && self.geometry.regions.is_none() {
            self.geometry.preset = Some(Preset::PlaneSurrogate);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{name} must be positive, got {v}")))
            }
        };
        let range = |name: &str, r: [f64; 2]| {
            if r[0] > 0.0 && r[1] > r[0] && r[1].is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{name} must satisfy 0 < lo < hi, got {r:?}")))
            }
        };
        positive("ions.height", self.ions.height)?;
        if !self.ions.z.is_finite() {
            return Err(config_err("ions.z must be finite"));
        }
        if self.ions.axes.is_empty() {
            return Err(config_err("ions.axes must name at least one axis"));
        }
        if self.dipoles.orientations.is_empty() {
            return Err(config_err("dipoles.orientations must contain at least one vector"));
        }
        self.orientations()?;
        positive("grid.resolution", self.grid.resolution.unwrap_or(1.0))?;
        self.kernel.validate().map_err(config_err)?;
        self.geometry()?;
        range("sweep.range", self.sweep.range)?;
        range("sweep.bracket", self.sweep.bracket)?;
        positive("sweep.separation", self.sweep.separation)?;
        if self.sweep.points < 2 {
            return Err(config_err("sweep.points must be at least 2"));
        }
        range("scaling.range", self.scaling.range)?;
        positive("scaling.nodes_per_height", self.scaling.nodes_per_height)?;
        positive("scaling.plane_factor", self.scaling.plane_factor)?;
        if self.scaling.window < 3 || self.scaling.points < self.scaling.window {
            return Err(config_err("scaling.window must be at least 3 and no larger than scaling.points"));
        }
        range("chain.spacing_range", self.chain.spacing_range)?;
        if self.chain.ions < 2 || self.chain.points < 2 {
            return Err(config_err("chain.ions and chain.points must be at least 2"));
        }
        if !(self.chain.coupling >= 0.0 && self.chain.coupling.is_finite()) {
            return Err(config_err("chain.coupling must be non-negative"));
        }
        if self.oracle.samples < 2 {
            return Err(config_err("oracle.samples must be at least 2"));
        }
        positive("oracle.separation", self.oracle.separation)?;
        positive("oracle.z_threshold", self.oracle.z_threshold)?;
        if !(0.0..=1.0).contains(&self.oracle.min_pass_fraction) {
            return Err(config_err("oracle.min_pass_fraction must lie in [0, 1]"));
        }
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(config_err("output.prefix must be a non-empty file name"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ElectrodeGeometry, CliError> {
        let g = &self.geometry;
        match (&g.preset, &g.regions) {
            (Some(_), Some(_)) => Err(config_err("geometry: give either preset or regions, not both")),
            (None, Some(regions)) => ElectrodeGeometry::new(regions.clone()).map_err(config_err),
            (preset, None) => match preset.unwrap_or(Preset::PlaneSurrogate) {
                Preset::SegmentedTrap => segmented_trap(g.scale, g.strip_offset).map_err(config_err),
                p => preset_geometry(p, g.scale).map_err(config_err),
            },
        }
    }

    pub fn orientations(&self) -> Result<Vec<DipoleOrientation>, CliError> {
        self.dipoles
            .orientations
            .iter()
            .map(|u| DipoleOrientation::new(u[0], u[1], u[2]).map_err(config_err))
            .collect()
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution.unwrap_or(DEFAULT_NODES_PER_HEIGHT / self.ions.height)
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{log_space, prepare_grid};
use crate::error::Result;
use crate::geometry::ElectrodeGeometry;
use crate::kernels::{Axis, CorrelationKernel, DipoleOrientation, SourceKind};
use crate::modes::{chain_modes_coupled, Parity};
use crate::noise::{mode_noise, IonConfiguration, NoiseEngine, NoiseOptions};

/// An equally spaced chain along x above an electrode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSetup {
    pub geometry: ElectrodeGeometry,
    pub ions: usize,
    /// Coulomb coupling relative to the trap stiffness at unit spacing. For
    /// equal spacing it changes the frequencies but not the mode shapes.
    pub coupling: f64,
    pub axis: Axis,
    pub orientation: DipoleOrientation,
    pub kernel: CorrelationKernel,
    pub source: SourceKind,
    pub height: f64,
    pub ion_z: f64,
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSweep {
    pub spacings: Vec<f64>,
    /// Mode frequencies in units of the single-ion frequency, ascending.
    pub frequencies: Vec<f64>,
    pub parity: Vec<Parity>,
    /// `noise[p][j]`: noise of mode `j` at spacing `spacings[p]`.
    pub noise: Vec<Vec<f64>>,
}

/// Per-mode noise `S_j` over log-spaced chain spacings.
pub fn chain_mode_sweep(setup: &ChainSetup, range: (f64, f64), points: usize) -> Result<ChainSweep> {
    let basis = chain_modes_coupled(setup.ions, setup.coupling)?;
    let spacings = log_space(range.0, range.1, points)?;
    let grid = prepare_grid(&setup.geometry, setup.resolution, &setup.kernel)?;
    let engine = NoiseEngine::new(&grid, &setup.kernel, &NoiseOptions::default())?;
    let noise = spacings
        .par_iter()
        .map(|&l| {
            let ions = IonConfiguration::chain(setup.ions, l, setup.height, setup.ion_z, setup.axis)?;
            mode_noise(&engine.matrix(&ions, setup.orientation, setup.source)?, &basis)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainSweep {
        spacings,
        frequencies: basis.frequencies().expect("chain modes carry frequencies").to_vec(),
        parity: basis.parity().to_vec(),
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::PairSetup;
    use crate::geometry::{preset_geometry, Preset};

    #[test]
    fn two_ion_chain_matches_pair_path() {
        let geometry = preset_geometry(Preset::SegmentedTrap, 1.0).unwrap();
        let setup = ChainSetup {
            geometry: geometry.clone(),
            ions: 2,
            coupling: 10.0,
            axis: Axis::X,
            orientation: DipoleOrientation::X,
            kernel: CorrelationKernel::Uncorrelated,
            source: SourceKind::Dipole,
            height: 1.0,
            ion_z: 0.0,
            resolution: 4.0,
        };
        let sweep = chain_mode_sweep(&setup, (0.1, 1.0), 3).unwrap();
        let pair = PairSetup::new(geometry, Axis::X, DipoleOrientation::X, 1.0).with_resolution(4.0);
        for (l, row) in sweep.spacings.iter().zip(&sweep.noise) {
            let sc = pair.evaluate(*l).unwrap();
            assert!((row[0] - (sc.s_self + sc.s_cross)).abs() < 1e-12 * sc.s_self);
            assert!((row[1] - (sc.s_self - sc.s_cross)).abs() < 1e-12 * sc.s_self);
        }
        assert_eq!(sweep.parity, vec![Parity::Even, Parity::Odd]);
    }
}

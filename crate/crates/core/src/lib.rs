//! Electric-field noise from fluctuating surface dipoles on trapped ions.
//!
//! The pipeline is geometry -> quadrature grid -> noise matrix -> mode
//! projections, with sweeps, crossover searches and scaling fits on top, and a
//! Monte-Carlo estimator that checks the deterministic sums independently.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod consts;
mod convolve;
pub mod error;
pub mod geometry;
pub mod kelvin;
pub mod kernels;
pub mod modes;
pub mod noise;
pub mod oracle;
pub mod summation;

pub use error::{Error, Result};
pub use geometry::{build_grid, preset_geometry, ElectrodeGeometry, Preset, QuadratureGrid, Region};
pub use analysis::{classify_orientation, find_crossover, ratio_sweep, CrossoverReport, PairSetup, SweepResult};
pub use kelvin::kelvin_ker0;
pub use kernels::{corr_kernel, dipole_g, monopole_g, Axis, CorrelationKernel, DipoleOrientation, SourceKind};
pub use modes::{chain_modes, chain_modes_coupled, mode_parity, two_ion_basis, ModeBasis, Parity};
pub use noise::{cross_mode_term, mode_noise, noise_matrix, self_cross, IonConfiguration, NoiseMatrix, SelfCross};
pub use oracle::{mc_ensemble_noise, EnsembleEstimate, EnsembleSampler};

/// Crate version, recorded in output sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

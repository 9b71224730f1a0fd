//! Sweeps, crossover searches, orientation classification, scaling fits and
//! conversions to physical rates.

mod chain;
mod crossover;
mod orientation;
mod rates;
mod scaling;
mod sweep;

pub use chain::{chain_mode_sweep, ChainSetup, ChainSweep};
pub use crossover::{find_crossover, find_sign_change, CrossoverReport, SCAN_POINTS};
pub use orientation::{classify_orientation, OrientationClass};
pub use rates::{heating_rate, ratio_uncertainty, xi_from_diffusion};
pub use scaling::{fit_slope, one_ion_noise, scaling_exponent, scaling_sweep, ScalingAnalysis, ScalingSetup};
pub use sweep::{log_space, prepare_grid, ratio_sweep, PairSetup, SweepMeta, SweepResult, SweepRow, SweepVariable};

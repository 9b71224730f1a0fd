use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{log_space, prepare_grid};
use crate::error::{invalid, Result};
use crate::geometry::{plane_surrogate, DEFAULT_NODES_PER_HEIGHT, PLANE_SURROGATE_FACTOR};
use crate::kernels::{Axis, CorrelationKernel, DipoleOrientation, SourceKind};
use crate::noise::{IonConfiguration, NoiseEngine, NoiseOptions};

/// One ion above a square plane that is rebuilt at side `plane_factor * d`
/// for every height, with a grid of `nodes_per_height` cells per `d`. Finite
/// size effects are then the same at every `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSetup {
    pub axis: Axis,
    pub orientation: DipoleOrientation,
    pub kernel: CorrelationKernel,
    pub source: SourceKind,
    pub nodes_per_height: f64,
    pub plane_factor: f64,
}

impl ScalingSetup {
    pub fn new(axis: Axis, orientation: DipoleOrientation, kernel: CorrelationKernel) -> Self {
        ScalingSetup {
            axis,
            orientation,
            kernel,
            source: SourceKind::Dipole,
            nodes_per_height: DEFAULT_NODES_PER_HEIGHT,
            plane_factor: PLANE_SURROGATE_FACTOR,
        }
    }
}

/// Single-ion noise `s_11` at height `d`.
pub fn one_ion_noise(setup: &ScalingSetup, d: f64) -> Result<f64> {
    let geometry = plane_surrogate(d, setup.plane_factor)?;
    let grid = prepare_grid(&geometry, setup.nodes_per_height / d, &setup.kernel)?;
    let engine = NoiseEngine::new(&grid, &setup.kernel, &NoiseOptions::default())?;
    let ions = IonConfiguration::new(vec![[0.0, d, 0.0]], setup.axis)?;
    Ok(engine.matrix(&ions, setup.orientation, setup.source)?.get(0, 0))
}

/// `(d, S(d))` on `points` log-spaced heights.
pub fn scaling_sweep(setup: &ScalingSetup, range: (f64, f64), points: usize) -> Result<Vec<(f64, f64)>> {
    let ds = log_space(range.0, range.1, points)?;
    ds.par_iter().map(|&d| Ok((d, one_ion_noise(setup, d)?))).collect()
}

/// Least-squares slope of `ln s` against `ln d`.
pub fn fit_slope(d: &[f64], s: &[f64]) -> Result<f64> {
    if d.len() != s.len() {
        return invalid(format!("fit needs matching lengths, got {} and {}", d.len(), s.len()));
    }
    if d.len() < 3 {
        return invalid(format!("fit needs at least three points, got {}", d.len()));
    }
    if let Some(bad) = s.iter().chain(d).find(|v| !(**v > 0.0)) {
        return invalid(format!("log-log fit needs positive values, got {bad}"));
    }
    let x: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return invalid("fit needs at least two distinct heights");
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingAnalysis {
    /// Local slope at every input point, fitted over a window centred on it
    /// (clipped at the ends of the sweep).
    pub slopes: Vec<f64>,
    /// Height where the local slope changes fastest with `ln d`; `None` when
    /// the slope varies by less than 0.5 over the sweep (a single regime).
    pub break_point: Option<f64>,
}

/// Sliding-window local slopes of `ln s` against `ln d`.
pub fn scaling_exponent(d: &[f64], s: &[f64], window: usize) -> Result<ScalingAnalysis> {
    if window < 3 {
        return invalid(format!("slope window needs at least three points, got {window}"));
    }
    if d.len() != s.len() || d.len() < window {
        return invalid(format!("need at least {window} matching points, got {} and {}", d.len(), s.len()));
    }
    if d.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("heights must be strictly increasing");
    }
    let n = d.len();
    let slopes = (0..n)
        .map(|i| {
            let start = i.saturating_sub(window / 2).min(n - window);
            fit_slope(&d[start..start + window], &s[start..start + window])
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let break_point = if hi - lo < 0.5 {
        None
    } else {
        let mut best = (0.0, 0usize);
        for k in 0..n - 1 {
            let rate = ((slopes[k + 1] - slopes[k]) / (d[k + 1] / d[k]).ln()).abs();
            if rate > best.0 {
                best = (rate, k);
            }
        }
        Some((d[best.1] * d[best.1 + 1]).sqrt())
    };
    Ok(ScalingAnalysis { slopes, break_point })
}

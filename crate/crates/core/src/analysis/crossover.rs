use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{log_space, PairSetup};
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseEngine;

/// Log-spaced samples used to bracket sign changes before bisection.
pub const SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverReport {
    pub found: bool,
    /// Smallest separation where `S_cross` changes sign.
    pub location: Option<f64>,
    pub bracket: (f64, f64),
    /// `|S_cross|` at the reported location.
    pub residual: Option<f64>,
    /// Sign changes seen on the scan grid.
    pub sign_changes: usize,
}

/// Scan `f` on [`SCAN_POINTS`] log-spaced points of `bracket`, then bisect the
/// first sign change until the bracket is narrower than `tol`.
pub fn find_sign_change<F>(f: F, bracket: (f64, f64), tol: f64) -> Result<CrossoverReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let xs = log_space(bracket.0, bracket.1, SCAN_POINTS)?;
    let eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("non-finite cross noise {v} at separation {x}")))
        }
    };
    let ys = xs.par_iter().map(|&x| eval(x)).collect::<Result<Vec<_>>>()?;
    let positive: Vec<bool> = ys.iter().map(|&y| y > 0.0).collect();
    let sign_changes = positive.windows(2).filter(|w| w[0] != w[1]).count();
    let Some(first) = positive.windows(2).position(|w| w[0] != w[1]) else {
        return Ok(CrossoverReport { found: false, location: None, bracket, residual: None, sign_changes });
    };
    let (mut lo, mut hi) = (xs[first], xs[first + 1]);
    let lo_positive = positive[first];
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if (eval(mid)? > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let at = 0.5 * (lo + hi);
    Ok(CrossoverReport {
        found: true,
        location: Some(at),
        bracket,
        residual: Some(eval(at)?.abs()),
        sign_changes,
    })
}

/// Separation at which `S_cross` changes sign, bisected to `1e-3 d`.
pub fn find_crossover(setup: &PairSetup, bracket: (f64, f64)) -> Result<CrossoverReport> {
    let grid = setup.grid()?;
    let engine = NoiseEngine::new(&grid, &setup.kernel, &setup.options)?;
    find_sign_change(
        |l| Ok(setup.evaluate_with(&engine, l, setup.height)?.s_cross),
        bracket,
        1e-3 * setup.height,
    )
}

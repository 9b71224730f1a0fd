//! Monte-Carlo check of the noise sums: draw explicit Gaussian dipole fields
//! with the kernel's covariance, compute the fields at the ions and average
//! `E_i E_j`. The expectation equals the deterministic sum on the same grid,
//! so disagreement beyond a few standard errors is a bug.
//!
//! Each sample is `E = B^T z` with `z` standard normal and `B` fixed:
//! - uncorrelated: `B[l, i] = sqrt(w_l) g_i(l)`;
//! - patch: `B[p, i] = sum_{l in p} w_l g_i(l)`;
//! - otherwise `B = L^T a` with `F = L L^T` the node covariance and
//!   `a[l, i] = w_l g_i(l)`.
//!
//! Randomness: batch `b` of [`BATCH`] samples draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `b`. Batch statistics
//! are merged in batch order, so results do not depend on the thread count.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::QuadratureGrid;
use crate::kernels::{CorrelationKernel, DipoleOrientation, SourceKind};
use crate::noise::{fields, weighted_fields, IonConfiguration, NoiseMatrix};

/// Samples per RNG stream.
pub const BATCH: usize = 1000;

/// Largest node count for which a dense covariance factorization is attempted.
pub const MAX_DENSE_NODES: usize = 4000;

const JITTER: f64 = 1e-10;
const MAX_CLIPPED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub s_hat: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Negative covariance eigenvalue mass removed, as a fraction of the trace.
    pub clipped_mass: f64,
}

impl EnsembleEstimate {
    /// `(s_hat - s) / stderr` entry by entry.
    pub fn z_scores(&self, reference: &NoiseMatrix) -> Result<DMatrix<f64>> {
        let n = self.s_hat.nrows();
        if reference.n() != n {
            return Err(Error::Dimension { expected: n, actual: reference.n() });
        }
        Ok(DMatrix::from_fn(n, n, |i, j| (self.s_hat[(i, j)] - reference.get(i, j)) / self.stderr[(i, j)]))
    }
}

/// Precomputed projection for repeated ensemble runs.
pub struct EnsembleSampler {
    /// Row-major `dim x n`.
    b: Vec<f64>,
    dim: usize,
    n: usize,
    clipped_mass: f64,
}

impl EnsembleSampler {
    /// `sign_fault` negates the first ion's field functions; it exists only to
    /// prove that the comparison catches a sign error.
    pub fn new(
        ions: &IonConfiguration,
        grid: &QuadratureGrid,
        orientation: DipoleOrientation,
        kernel: &CorrelationKernel,
        source: SourceKind,
        sign_fault: bool,
    ) -> Result<Self> {
        kernel.validate()?;
        let n = ions.len();
        let m = grid.len();
        let flip = |i: usize, v: Vec<f64>| -> Vec<f64> {
            if sign_fault && i == 0 {
                v.into_iter().map(|x| -x).collect()
            } else {
                v
            }
        };
        let (cols, dim, clipped_mass): (Vec<Vec<f64>>, usize, f64) = match kernel {
            CorrelationKernel::Uncorrelated => {
                let g = fields(ions, grid, orientation, source);
                let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
                let cols = g
                    .into_iter()
                    .enumerate()
                    .map(|(i, gi)| flip(i, gi.iter().zip(&sw).map(|(g, s)| g * s).collect()))
                    .collect();
                (cols, m, 0.0)
            }
            CorrelationKernel::Patch { .. } => {
                let Some(ids) = grid.patch_ids() else {
                    return invalid("patch kernel needs a grid carrying a patch map");
                };
                let p = ids.iter().copied().max().map_or(0, |x| x as usize + 1);
                let a = weighted_fields(ions, grid, orientation, source);
                let cols = a
                    .into_iter()
                    .enumerate()
                    .map(|(i, ai)| {
                        let mut sums = vec![0.0; p];
                        for (l, &id) in ids.iter().enumerate() {
                            sums[id as usize] += ai[l];
                        }
                        flip(i, sums)
                    })
                    .collect();
                (cols, p, 0.0)
            }
            _ => {
                if m > MAX_DENSE_NODES {
                    return invalid(format!(
                        "grid has {m} nodes; dense covariance sampling is limited to {MAX_DENSE_NODES}"
                    ));
                }
                let profile = kernel.profile(grid.min_cell_diagonal())?.expect("correlated kernel");
                let nodes = grid.nodes();
                let mut cov = DMatrix::from_fn(m, m, |l, k| {
                    if l == k {
                        1.0
                    } else {
                        profile.eval((nodes[l][0] - nodes[k][0]).hypot(nodes[l][1] - nodes[k][1]))
                    }
                });
                let jitter = JITTER * cov.trace();
                for l in 0..m {
                    cov[(l, l)] += jitter;
                }
                let (factor, clipped) = factorize(cov)?;
                let a = weighted_fields(ions, grid, orientation, source);
                let amat = DMatrix::from_fn(m, n, |l, i| a[i][l]);
                let b = factor.transpose() * amat;
                let cols = (0..n).map(|i| flip(i, b.column(i).iter().copied().collect())).collect();
                (cols, m, clipped)
            }
        };
        let mut b = vec![0.0; dim * n];
        for (i, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                b[r * n + i] = *v;
            }
        }
        Ok(EnsembleSampler { b, dim, n, clipped_mass })
    }

    pub fn run(&self, n_samples: usize, seed: u64) -> Result<EnsembleEstimate> {
        if n_samples < 2 {
            return invalid(format!("need at least two samples for a standard error, got {n_samples}"));
        }
        let batches = n_samples.div_ceil(BATCH);
        let stats: Vec<Moments> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let count = BATCH.min(n_samples - b * BATCH);
                self.batch(seed, b as u64, count)
            })
            .collect();
        let total = stats.into_iter().reduce(Moments::merge).expect("at least one batch");
        let n = self.n;
        let cnt = total.count as f64;
        let s_hat = DMatrix::from_fn(n, n, |i, j| total.mean[i * n + j]);
        let stderr = DMatrix::from_fn(n, n, |i, j| (total.m2[i * n + j] / (cnt - 1.0) / cnt).sqrt());
        Ok(EnsembleEstimate { s_hat, stderr, n_samples, seed, clipped_mass: self.clipped_mass })
    }

    fn batch(&self, seed: u64, stream: u64, count: usize) -> Moments {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n = self.n;
        let mut acc = Moments::new(n * n);
        let mut e = vec![0.0; n];
        let mut x = vec![0.0; n * n];
        for _ in 0..count {
            e.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..self.dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                let row = &self.b[r * n..(r + 1) * n];
                for i in 0..n {
                    e[i] += z * row[i];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    x[i * n + j] = e[i] * e[j];
                }
            }
            acc.push(&x);
        }
        acc
    }
}

/// Factor `F = L L^T`. Falls back to an eigen-decomposition with negative
/// eigenvalues clipped to zero, failing if more than 1% of the trace is lost.
fn factorize(cov: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(ch) = Cholesky::new(cov.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let trace = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let clipped: f64 = eig.eigenvalues.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let fraction = clipped / trace;
    if fraction > MAX_CLIPPED_FRACTION {
        return Err(Error::Numerical(format!(
            "kernel covariance is indefinite: clipped eigenvalue mass {:.3}% of the trace exceeds {}%",
            100.0 * fraction,
            100.0 * MAX_CLIPPED_FRACTION
        )));
    }
    let m = eig.eigenvalues.len();
    let mut l = eig.eigenvectors;
    for c in 0..m {
        let s = eig.eigenvalues[c].max(0.0).sqrt();
        l.column_mut(c).scale_mut(s);
    }
    Ok((l, fraction))
}

/// Running mean and centred second moment per entry (Welford), mergeable
/// with Chan's formula.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments { count: 0, mean: vec![0.0; n], m2: vec![0.0; n] }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let c = self.count as f64;
        for ((&xk, mean), m2) in x.iter().zip(&mut self.mean).zip(&mut self.m2) {
            let delta = xk - *mean;
            *mean += delta / c;
            *m2 += delta * (xk - *mean);
        }
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0 {
            return b;
        }
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        let mut out = Moments::new(a.mean.len());
        out.count = a.count + b.count;
        for k in 0..a.mean.len() {
            let delta = b.mean[k] - a.mean[k];
            out.mean[k] = a.mean[k] + delta * nb / n;
            out.m2[k] = a.m2[k] + b.m2[k] + delta * delta * na * nb / n;
        }
        out
    }
}

/// One-shot ensemble estimate.
pub fn mc_ensemble_noise(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    kernel: &CorrelationKernel,
    source: SourceKind,
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    EnsembleSampler::new(ions, grid, orientation, kernel, source, false)?.run(n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, make_patch_map, ElectrodeGeometry, Region};
    use crate::kernels::Axis;
    use crate::noise::noise_matrix;

    fn setup() -> (ElectrodeGeometry, QuadratureGrid, IonConfiguration) {
        let geo = ElectrodeGeometry::new(vec![Region::rectangle(-1.5, 1.5, -1.5, 1.5)]).unwrap();
        let grid = build_grid(&geo, 4.0).unwrap();
        let ions = IonConfiguration::pair(0.6, 1.0, 0.0, Axis::X).unwrap();
        (geo, grid, ions)
    }

    fn within(est: &EnsembleEstimate, reference: &NoiseMatrix, k: f64) -> usize {
        est.z_scores(reference).unwrap().iter().filter(|z| z.abs() <= k).count()
    }

    #[test]
    fn uncorrelated_agrees() {
        let (_, grid, ions) = setup();
        let k = CorrelationKernel::Uncorrelated;
        let s = noise_matrix(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole).unwrap();
        let est = mc_ensemble_noise(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, 20_000, 1).unwrap();
        assert!(within(&est, &s, 4.0) == 4, "{est:?} vs {s:?}");
        assert!(est.stderr.iter().all(|v| *v > 0.0));
        assert_eq!(est.s_hat, est.s_hat.transpose());
    }

    #[test]
    fn exponential_and_patch_agree() {
        let (geo, grid, ions) = setup();
        let k = CorrelationKernel::Exponential { xi: 0.3 };
        let s = noise_matrix(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole).unwrap();
        let est = mc_ensemble_noise(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, 20_000, 2).unwrap();
        assert_eq!(within(&est, &s, 4.0), 4);

        let k = CorrelationKernel::Patch { patch_scale: 0.7, seed: 9 };
        let grid = grid.clone().with_patches(&make_patch_map(&geo, &grid, 0.7, 9).unwrap()).unwrap();
        let s = noise_matrix(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole).unwrap();
        let est = mc_ensemble_noise(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, 20_000, 3).unwrap();
        assert_eq!(within(&est, &s, 4.0), 4);
    }

    #[test]
    fn sign_fault_is_detected() {
        let (_, grid, ions) = setup();
        let k = CorrelationKernel::Uncorrelated;
        let s = noise_matrix(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole).unwrap();
        let est = EnsembleSampler::new(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, true)
            .unwrap()
            .run(20_000, 1)
            .unwrap();
        let z = est.z_scores(&s).unwrap();
        assert!(z[(0, 1)].abs() > 10.0, "{z}");
    }

    #[test]
    fn deterministic_per_seed_and_thread_count() {
        let (_, grid, ions) = setup();
        let k = CorrelationKernel::Exponential { xi: 0.3 };
        let sampler = EnsembleSampler::new(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, false).unwrap();
        let run = |t: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| sampler.run(3500, 5).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_ne!(a.s_hat, sampler.run(3500, 6).unwrap().s_hat);
    }

    #[test]
    fn rejects_single_sample() {
        let (_, grid, ions) = setup();
        let k = CorrelationKernel::Uncorrelated;
        assert!(mc_ensemble_noise(&ions, &grid, DipoleOrientation::Y, &k, SourceKind::Dipole, 1, 0).is_err());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut all = Moments::new(1);
        data.iter().for_each(|x| all.push(&[*x]));
        let (mut a, mut b) = (Moments::new(1), Moments::new(1));
        data[..20].iter().for_each(|x| a.push(&[*x]));
        data[20..].iter().for_each(|x| b.push(&[*x]));
        let m = Moments::merge(a, b);
        assert!((m.mean[0] - all.mean[0]).abs() < 1e-14);
        assert!((m.m2[0] - all.m2[0]).abs() < 1e-12);
    }
}

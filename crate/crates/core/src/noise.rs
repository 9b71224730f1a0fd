//! Field-noise correlators between ions.
//!
//! Units: dipole density and dipole-strength variance are both 1, and
//! `1/(4 pi eps0)` is dropped, so absolute values of `s` carry no physical
//! scale. Ratios, sign changes and scaling exponents are unaffected.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::convolve::LatticeConvolver;
use crate::error::{invalid, Error, Result};
use crate::geometry::QuadratureGrid;
use crate::kernels::{source_rel, Axis, CorrelationKernel, DipoleOrientation, Profile, SourceKind};
use crate::modes::ModeBasis;
use crate::summation::{add_vecs, chunked_reduce, tree_reduce, CHUNK};

/// Ions sharing one height above the electrode, and the motion axis studied.
#[derive(Debug, Clone, PartialEq)]
pub struct IonConfiguration {
    positions: Vec<[f64; 3]>,
    axis: Axis,
}

impl IonConfiguration {
    /// Positions are `(x, d, z)`. Coincident ions are allowed: they are the
    /// exact common-bath reference point.
    pub fn new(positions: Vec<[f64; 3]>, axis: Axis) -> Result<Self> {
        let Some(first) = positions.first() else {
            return invalid("ion configuration is empty");
        };
        let d = first[1];
        if !(d > 0.0 && d.is_finite()) {
            return invalid(format!("ion height must be positive, got {d}"));
        }
        for p in &positions {
            if !p.iter().all(|v| v.is_finite()) {
                return invalid(format!("non-finite ion position {p:?}"));
            }
            if (p[1] - d).abs() > 1e-12 * d {
                return invalid(format!("ions must share one height; got {} and {d}", p[1]));
            }
        }
        Ok(IonConfiguration { positions, axis })
    }

    /// Two ions at height `d`, `l` apart along x, centred on `x = 0` at `z`.
    pub fn pair(separation: f64, height: f64, z: f64, axis: Axis) -> Result<Self> {
        if !(separation >= 0.0) {
            return invalid(format!("ion separation must be non-negative, got {separation}"));
        }
        let h = 0.5 * separation;
        Self::new(vec![[-h, height, z], [h, height, z]], axis)
    }

    /// `n` equally spaced ions along x, centred on `x = 0`.
    pub fn chain(n: usize, spacing: f64, height: f64, z: f64, axis: Axis) -> Result<Self> {
        if n == 0 {
            return invalid("chain needs at least one ion");
        }
        let c = 0.5 * (n - 1) as f64;
        Self::new((0..n).map(|i| [(i as f64 - c) * spacing, height, z]).collect(), axis)
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn height(&self) -> f64 {
        self.positions[0][1]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same ions with the positions in reverse order.
    pub fn reversed(&self) -> Self {
        let mut p = self.positions.clone();
        p.reverse();
        IonConfiguration { positions: p, axis: self.axis }
    }
}

/// Symmetric matrix of field correlators `s_ij` for one motion axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    s: DMatrix<f64>,
    pub axis: Axis,
    pub source: SourceKind,
    pub orientation: DipoleOrientation,
    pub kernel: CorrelationKernel,
}

impl NoiseMatrix {
    /// Wrap an externally computed matrix (e.g. for testing mode projections).
    pub fn from_matrix(s: DMatrix<f64>) -> Result<Self> {
        if !s.is_square() || s.nrows() == 0 {
            return invalid(format!("noise matrix must be square and non-empty, got {}x{}", s.nrows(), s.ncols()));
        }
        let m = NoiseMatrix {
            s,
            axis: Axis::X,
            source: SourceKind::Dipole,
            orientation: DipoleOrientation::Y,
            kernel: CorrelationKernel::Uncorrelated,
        };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[(i, j)]
    }

    /// Symmetry, positive diagonal and Cauchy-Schwarz on every pair.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            let sii = self.s[(i, i)];
            if !(sii > 0.0 && sii.is_finite()) {
                return Err(Error::Invariant(format!("diagonal entry s[{i},{i}] = {sii} is not positive")));
            }
            for j in 0..i {
                let sij = self.s[(i, j)];
                if sij != self.s[(j, i)] {
                    return Err(Error::Invariant(format!("noise matrix not symmetric at ({i},{j})")));
                }
                let bound = (sii * self.s[(j, j)]).sqrt();
                if !(sij.abs() <= bound * (1.0 + 1e-9)) {
                    return Err(Error::Invariant(format!(
                        "|s[{i},{j}]| = {:e} exceeds sqrt(s_ii s_jj) = {bound:e}",
                        sij.abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How correlated pair sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// FFT convolution when the grid is a single lattice and large enough to
    /// benefit, the pair loop otherwise.
    #[default]
    Auto,
    /// Symmetric O(M^2) pair loop.
    Direct,
    /// FFT convolution; requires a lattice grid.
    Fft,
}

const FFT_MIN_NODES: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseOptions {
    pub method: Method,
}

/// Noise matrix with default options.
pub fn noise_matrix(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    kernel: &CorrelationKernel,
    source: SourceKind,
) -> Result<NoiseMatrix> {
    noise_matrix_with(ions, grid, orientation, kernel, source, &NoiseOptions::default())
}

/// `s_ij = sum_{l,k} w_l w_k f(r_l, r_k) g_i(l) g_j(k)`.
///
/// Uncorrelated kernels collapse to `sum_l w_l g_i(l) g_j(l)`; patch kernels
/// use the factored per-patch sums. Same-node terms use `f = 1`.
pub fn noise_matrix_with(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    kernel: &CorrelationKernel,
    source: SourceKind,
    options: &NoiseOptions,
) -> Result<NoiseMatrix> {
    NoiseEngine::new(grid, kernel, options)?.matrix(ions, orientation, source)
}

enum Prepared {
    Uncorrelated,
    Patch,
    Direct(Profile),
    Fft(Box<LatticeConvolver>),
}

/// A grid and kernel prepared once for many ion configurations. For lattice
/// grids the kernel transform is computed here and reused by every call.
pub struct NoiseEngine<'g> {
    grid: &'g QuadratureGrid,
    kernel: CorrelationKernel,
    prepared: Prepared,
}

impl<'g> NoiseEngine<'g> {
    pub fn new(grid: &'g QuadratureGrid, kernel: &CorrelationKernel, options: &NoiseOptions) -> Result<Self> {
        kernel.validate()?;
        if grid.is_empty() {
            return invalid("quadrature grid has no nodes");
        }
        let prepared = match kernel {
            CorrelationKernel::Uncorrelated => Prepared::Uncorrelated,
            CorrelationKernel::Patch { .. } => {
                if grid.patch_ids().is_none() {
                    return invalid("patch kernel needs a grid carrying a patch map");
                }
                Prepared::Patch
            }
            _ => {
                let profile = kernel.profile(grid.min_cell_diagonal())?.expect("correlated kernel");
                let lattice = grid.lattice();
                let use_fft = match options.method {
                    Method::Direct => false,
                    Method::Fft if lattice.is_none() => {
                        return invalid("FFT evaluation needs a grid on a single lattice");
                    }
                    Method::Fft => true,
                    Method::Auto => lattice.is_some() && grid.len() >= FFT_MIN_NODES,
                };
                match lattice {
                    Some(lat) if use_fft => Prepared::Fft(Box::new(LatticeConvolver::new(&lat, &profile))),
                    _ => Prepared::Direct(profile),
                }
            }
        };
        Ok(NoiseEngine { grid, kernel: *kernel, prepared })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.grid
    }

    /// True when correlated sums go through the FFT path.
    pub fn uses_fft(&self) -> bool {
        matches!(self.prepared, Prepared::Fft(_))
    }

    pub fn matrix(
        &self,
        ions: &IonConfiguration,
        orientation: DipoleOrientation,
        source: SourceKind,
    ) -> Result<NoiseMatrix> {
        let grid = self.grid;
        let n = ions.len();
        let s = match &self.prepared {
            Prepared::Uncorrelated => uncorrelated(ions, grid, orientation, source),
            Prepared::Patch => {
                let a = weighted_fields(ions, grid, orientation, source);
                patch_factored(&a, grid.patch_ids().expect("checked in new"), n)
            }
            Prepared::Direct(profile) => {
                let a = weighted_fields(ions, grid, orientation, source);
                pair_loop(&a, grid.nodes(), |r| profile.eval(r))
            }
            Prepared::Fft(conv) => {
                let a = weighted_fields(ions, grid, orientation, source);
                let h: Vec<Vec<f64>> = a.par_iter().map(|aj| conv.apply(aj)).collect();
                let mut s = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        s[i * n + j] = dot(&a[i], &h[j]);
                    }
                }
                // symmetrize the rounding-level asymmetry of the two products
                for i in 0..n {
                    for j in 0..i {
                        let m = 0.5 * (s[i * n + j] + s[j * n + i]);
                        s[i * n + j] = m;
                        s[j * n + i] = m;
                    }
                }
                s
            }
        };
        let m = NoiseMatrix {
            s: DMatrix::from_row_slice(n, n, &s),
            axis: ions.axis(),
            source,
            orientation,
            kernel: self.kernel,
        };
        m.check_invariants()?;
        Ok(m)
    }
}

/// `a_i(l) = w_l g_i(l)` for every ion.
pub(crate) fn weighted_fields(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    source: SourceKind,
) -> Vec<Vec<f64>> {
    let u = orientation.components();
    let axis = ions.axis();
    let d = ions.height();
    ions.positions()
        .par_iter()
        .map(|p| {
            grid.nodes()
                .iter()
                .zip(grid.weights())
                .map(|(q, w)| w * source_rel(source, axis, &u, d, q[0] - p[0], q[1] - p[2]))
                .collect()
        })
        .collect()
}

/// Unweighted field functions `g_i(l)`.
pub(crate) fn fields(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    source: SourceKind,
) -> Vec<Vec<f64>> {
    let u = orientation.components();
    let axis = ions.axis();
    let d = ions.height();
    ions.positions()
        .iter()
        .map(|p| {
            grid.nodes()
                .iter()
                .map(|q| source_rel(source, axis, &u, d, q[0] - p[0], q[1] - p[2]))
                .collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    chunked_reduce(
        a.len(),
        CHUNK,
        |r| a[r.clone()].iter().zip(&b[r]).map(|(x, y)| x * y).sum::<f64>(),
        |x, y| x + y,
    )
    .unwrap_or(0.0)
}

fn mirror_upper(n: usize, mut s: Vec<f64>) -> Vec<f64> {
    for i in 0..n {
        for j in 0..i {
            s[i * n + j] = s[j * n + i];
        }
    }
    s
}

fn uncorrelated(
    ions: &IonConfiguration,
    grid: &QuadratureGrid,
    orientation: DipoleOrientation,
    source: SourceKind,
) -> Vec<f64> {
    let g = fields(ions, grid, orientation, source);
    let w = grid.weights();
    let n = ions.len();
    let s = chunked_reduce(
        w.len(),
        CHUNK,
        |r| {
            let mut acc = vec![0.0; n * n];
            for l in r {
                for i in 0..n {
                    let wg = w[l] * g[i][l];
                    for j in i..n {
                        acc[i * n + j] += wg * g[j][l];
                    }
                }
            }
            acc
        },
        add_vecs,
    )
    .unwrap();
    mirror_upper(n, s)
}

/// `s_ij = sum_p A_i(p) A_j(p)` with `A_i(p)` the weighted field of patch `p`.
fn patch_factored(a: &[Vec<f64>], ids: &[u32], n: usize) -> Vec<f64> {
    let n_patches = ids.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut sums = vec![vec![0.0; n_patches]; n];
    for (i, ai) in a.iter().enumerate() {
        for (l, &p) in ids.iter().enumerate() {
            sums[i][p as usize] += ai[l];
        }
    }
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            s[i * n + j] = dot(&sums[i], &sums[j]);
        }
    }
    mirror_upper(n, s)
}

/// Symmetric pair loop. With `T_j(l) = sum_{k>l} f_lk a_j(k)`:
/// `s_ij = sum_l [a_i(l) a_j(l) + a_i(l) T_j(l) + a_j(l) T_i(l)]`.
fn pair_loop<F>(a: &[Vec<f64>], nodes: &[[f64; 2]], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = a.len();
    let m = nodes.len();
    // Rows near the start carry more pairs; smaller chunks balance the load.
    let chunk = (CHUNK / 8).max(1);
    let s = chunked_reduce(
        m,
        chunk,
        |rows| {
            let mut acc = vec![0.0; n * n];
            let mut t = vec![0.0; n];
            for l in rows {
                t.iter_mut().for_each(|v| *v = 0.0);
                let [xl, zl] = nodes[l];
                for k in (l + 1)..m {
                    let fk = f((nodes[k][0] - xl).hypot(nodes[k][1] - zl));
                    for j in 0..n {
                        t[j] += fk * a[j][k];
                    }
                }
                for i in 0..n {
                    for j in i..n {
                        acc[i * n + j] += a[i][l] * a[j][l] + a[i][l] * t[j] + a[j][l] * t[i];
                    }
                }
            }
            acc
        },
        add_vecs,
    )
    .unwrap();
    mirror_upper(n, s)
}

/// Two-ion decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCross {
    pub s_self: f64,
    pub s_cross: f64,
    pub ratio: f64,
}

/// `S_self = (s11 + s22)/2`, `S_cross = s12`, `ratio = S_cross / S_self`.
pub fn self_cross(noise: &NoiseMatrix) -> Result<SelfCross> {
    if noise.n() != 2 {
        return Err(Error::Dimension { expected: 2, actual: noise.n() });
    }
    let s_self = 0.5 * (noise.get(0, 0) + noise.get(1, 1));
    let s_cross = noise.get(0, 1);
    Ok(SelfCross { s_self, s_cross, ratio: s_cross / s_self })
}

fn check_basis(noise: &NoiseMatrix, basis: &ModeBasis) -> Result<()> {
    if basis.n() != noise.n() {
        return Err(Error::Dimension { expected: noise.n(), actual: basis.n() });
    }
    Ok(())
}

fn bilinear(s: &DMatrix<f64>, f: &DMatrix<f64>, j: usize, k: usize) -> f64 {
    let n = s.nrows();
    let mut terms = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            terms.push(f[(j, a)] * s[(a, b)] * f[(k, b)]);
        }
    }
    tree_reduce(terms, |x, y| x + y).unwrap_or(0.0)
}

/// Noise seen by each normal mode: `S_j = f_j s f_j^T`.
pub fn mode_noise(noise: &NoiseMatrix, basis: &ModeBasis) -> Result<Vec<f64>> {
    check_basis(noise, basis)?;
    Ok((0..basis.n()).map(|j| bilinear(noise.matrix(), basis.f(), j, j)).collect())
}

/// Bath-induced coupling between modes `j != k`: `f_j s f_k^T`.
pub fn cross_mode_term(noise: &NoiseMatrix, basis: &ModeBasis, j: usize, k: usize) -> Result<f64> {
    check_basis(noise, basis)?;
    if j == k {
        return invalid("cross_mode_term needs two different modes; use mode_noise for j = k");
    }
    if j >= basis.n() || k >= basis.n() {
        return invalid(format!("mode index out of range for {} modes", basis.n()));
    }
    Ok(bilinear(noise.matrix(), basis.f(), j, k))
}

//! Normal modes of two ions and of equally spaced axial chains.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::consts::coulomb_constant;
use crate::error::{invalid, Error, Result};

/// Symmetry of a mode under reflection about the chain centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Orthonormal mode matrix; row `j` is mode `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    f: DMatrix<f64>,
    frequencies: Option<Vec<f64>>,
    parity: Vec<Parity>,
}

impl ModeBasis {
    /// Checks orthonormality to 1e-10.
    pub fn new(f: DMatrix<f64>, frequencies: Option<Vec<f64>>) -> Result<Self> {
        if !f.is_square() || f.nrows() < 2 {
            return invalid("mode matrix must be square with at least two rows");
        }
        let n = f.nrows();
        let err = (&f * f.transpose() - DMatrix::identity(n, n)).amax();
        if err > 1e-10 {
            return Err(Error::Invariant(format!("mode rows not orthonormal (max deviation {err:e})")));
        }
        if let Some(w) = &frequencies {
            if w.len() != n {
                return Err(Error::Dimension { expected: n, actual: w.len() });
            }
            if w.windows(2).any(|p| p[1] < p[0]) {
                return invalid("mode frequencies must be sorted ascending");
            }
        }
        let parity = (0..n).map(|j| mode_parity(f.row(j).iter().copied().collect::<Vec<_>>().as_slice())).collect();
        Ok(ModeBasis { f, frequencies, parity })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    pub fn mode(&self, j: usize) -> Vec<f64> {
        self.f.row(j).iter().copied().collect()
    }

    pub fn frequencies(&self) -> Option<&[f64]> {
        self.frequencies.as_deref()
    }

    pub fn parity(&self) -> &[Parity] {
        &self.parity
    }
}

/// Centre-of-mass `(1, 1)/sqrt 2` (even) and stretch `(1, -1)/sqrt 2` (odd).
pub fn two_ion_basis() -> ModeBasis {
    let h = FRAC_1_SQRT_2;
    ModeBasis::new(DMatrix::from_row_slice(2, 2, &[h, h, h, -h]), None).expect("orthonormal")
}

/// Even if the mirrored vector equals the vector within 1e-6 (relative to its
/// largest entry), odd if it equals its negative, otherwise none.
pub fn mode_parity(v: &[f64]) -> Parity {
    let n = v.len();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if n < 2 || scale == 0.0 {
        return Parity::None;
    }
    let tol = 1e-6 * scale;
    if (0..n).all(|i| (v[i] - v[n - 1 - i]).abs() <= tol) {
        Parity::Even
    } else if (0..n).all(|i| (v[i] + v[n - 1 - i]).abs() <= tol) {
        Parity::Odd
    } else {
        Parity::None
    }
}

/// Coulomb part of the axial stiffness for unit spring constants `kappa_ij =
/// 2 / |i - j|^3`, multiplied by `coupling`.
fn coulomb_block(n: usize, coupling: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let kij = coupling * 2.0 / ((i as f64 - j as f64).abs().powi(3));
                k[(i, j)] = -kij;
                k[(i, i)] += kij;
            }
        }
    }
    k
}

/// Axial modes of `n` ions held at equal `spacing` in harmonic wells of
/// angular frequency `omega0`, coupled by Coulomb repulsion.
///
/// Modes are ordered by frequency, so mode 0 is the centre-of-mass mode at
/// `omega0` and the two-ion stretch comes out above it.
pub fn chain_modes(n: usize, spacing: f64, omega0: f64, charge: f64, mass: f64) -> Result<ModeBasis> {
    if n < 2 {
        return invalid(format!("chain needs at least two ions, got {n}"));
    }
    for (name, v) in [("spacing", spacing), ("omega0", omega0), ("charge", charge), ("mass", mass)] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    let kappa = coulomb_constant() * charge * charge / spacing.powi(3);
    let mut k = coulomb_block(n, kappa);
    for i in 0..n {
        k[(i, i)] += mass * omega0 * omega0;
    }
    let (f, lambda) = modes_from_stiffness(&k)?;
    let w = lambda.iter().map(|l| (l.max(0.0) / mass).sqrt()).collect();
    ModeBasis::new(f, Some(w))
}

/// Dimensionless chain: stiffness `I + coupling * C` where `C` is the Coulomb
/// block at unit spacing. Frequencies are in units of the single-ion frequency.
pub fn chain_modes_coupled(n: usize, coupling: f64) -> Result<ModeBasis> {
    if n < 2 {
        return invalid(format!("chain needs at least two ions, got {n}"));
    }
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return invalid(format!("coupling must be non-negative, got {coupling}"));
    }
    let mut k = coulomb_block(n, coupling);
    for i in 0..n {
        k[(i, i)] += 1.0;
    }
    let (f, lambda) = modes_from_stiffness(&k)?;
    ModeBasis::new(f, Some(lambda.iter().map(|l| l.max(0.0).sqrt()).collect()))
}

/// Eigen-decomposition of a mirror-symmetric stiffness matrix, as mode rows
/// sorted by eigenvalue plus the eigenvalues.
///
/// Inside a degenerate cluster (eigenvalues equal to 1e-9 of the spectral
/// radius) the vectors are rotated onto eigenvectors of the reflection, so
/// every mode gets a definite parity; even members of a cluster come first.
/// Each mode is signed so that its first non-negligible entry is positive.
pub fn modes_from_stiffness(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = k.nrows();
    if !k.is_square() || n < 2 {
        return invalid("stiffness matrix must be square with at least two rows");
    }
    let eig = SymmetricEigen::new(k.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut v = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let radius = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && lambda[end] - lambda[start] <= 1e-9 * radius {
            end += 1;
        }
        if end - start > 1 {
            let block = v.columns(start, end - start).into_owned();
            let mirrored = DMatrix::from_fn(n, end - start, |r, c| block[(n - 1 - r, c)]);
            let p = block.transpose() * mirrored;
            let p = 0.5 * (&p + p.transpose());
            let pe = SymmetricEigen::new(p);
            let mut idx: Vec<usize> = (0..end - start).collect();
            idx.sort_by(|&a, &b| pe.eigenvalues[b].total_cmp(&pe.eigenvalues[a]));
            let q = DMatrix::from_fn(end - start, end - start, |r, c| pe.eigenvectors[(r, idx[c])]);
            let rotated = block * q;
            v.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    for c in 0..n {
        let scale = v.column(c).amax();
        if let Some(first) = v.column(c).iter().copied().find(|x| x.abs() > 1e-6 * scale) {
            if first < 0.0 {
                v.column_mut(c).neg_mut();
            }
        }
    }
    Ok((v.transpose(), lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::{CA40_ION_MASS, ELEMENTARY_CHARGE};
    use std::f64::consts::PI;

    fn orthonormal(b: &ModeBasis) -> f64 {
        let n = b.n();
        (b.f() * b.f().transpose() - DMatrix::<f64>::identity(n, n)).amax()
    }

    #[test]
    fn two_ion_rows() {
        let b = two_ion_basis();
        assert!(orthonormal(&b) < 1e-15);
        assert_eq!(b.parity(), &[Parity::Even, Parity::Odd]);
    }

    #[test]
    fn parity_labels() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(mode_parity(&[h, h]), Parity::Even);
        assert_eq!(mode_parity(&[h, -h]), Parity::Odd);
        assert_eq!(mode_parity(&[1.0, 0.0]), Parity::None);
        assert_eq!(mode_parity(&[1.0]), Parity::None);
    }

    #[test]
    fn physical_two_ion_chain() {
        let b = chain_modes(2, 5e-6, 2.0 * PI * 1e6, ELEMENTARY_CHARGE, CA40_ION_MASS).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((b.mode(0)[0] - h).abs() < 1e-12 && (b.mode(0)[1] - h).abs() < 1e-12);
        assert!((b.mode(1)[0] - h).abs() < 1e-12 && (b.mode(1)[1] + h).abs() < 1e-12);
        let w = b.frequencies().unwrap();
        assert!(w[1] > w[0]);
        assert!((w[0] / (2.0 * PI * 1e6) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ten_ion_chain_has_five_of_each_parity() {
        for coupling in [10.0, 100.0, 1e4] {
            let b = chain_modes_coupled(10, coupling).unwrap();
            let even = b.parity().iter().filter(|p| **p == Parity::Even).count();
            let odd = b.parity().iter().filter(|p| **p == Parity::Odd).count();
            assert_eq!((even, odd), (5, 5));
            assert!(orthonormal(&b) < 1e-10);
        }
    }

    #[test]
    fn eigen_residuals_and_trace() {
        let n = 7;
        let mut k = coulomb_block(n, 50.0);
        for i in 0..n {
            k[(i, i)] += 1.0;
        }
        let (f, lambda) = modes_from_stiffness(&k).unwrap();
        let norm = k.norm();
        for (j, &lj) in lambda.iter().enumerate() {
            let v = f.row(j).transpose();
            let r = (&k * &v - lj * &v).norm();
            assert!(r < 1e-8 * norm);
        }
        let tr: f64 = lambda.iter().sum();
        assert!((tr - k.trace()).abs() < 1e-8 * k.trace());
    }

    #[test]
    fn degenerate_cluster_gets_definite_parity() {
        let k = DMatrix::<f64>::identity(5, 5) * 3.0;
        let (f, _) = modes_from_stiffness(&k).unwrap();
        let b = ModeBasis::new(f, None).unwrap();
        let even = b.parity().iter().filter(|p| **p == Parity::Even).count();
        let odd = b.parity().iter().filter(|p| **p == Parity::Odd).count();
        assert_eq!((even, odd), (3, 2));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(chain_modes(1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(chain_modes(3, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(chain_modes(3, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(chain_modes_coupled(3, f64::NAN).is_err());
        assert!(ModeBasis::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), None).is_err());
    }
}

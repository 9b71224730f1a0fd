//! FFT convolution of node values with a translation-invariant kernel on a
//! lattice grid. Exact up to rounding: the lattice is zero-padded to twice its
//! size so the circular convolution never wraps.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::geometry::Lattice;
use crate::kernels::Profile;

pub(crate) struct LatticeConvolver {
    px: usize,
    pz: usize,
    index: Vec<(usize, usize)>,
    kernel_hat: Vec<Complex<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl LatticeConvolver {
    pub(crate) fn new(lattice: &Lattice, profile: &Profile) -> Self {
        let (px, pz) = (2 * lattice.nx, 2 * lattice.nz);
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(pz);
        let row_inv = planner.plan_fft_inverse(pz);
        let col_fwd = planner.plan_fft_forward(px);
        let col_inv = planner.plan_fft_inverse(px);
        let offset = |i: usize, n: usize, p: usize| -> Option<f64> {
            if i < n {
                Some(i as f64)
            } else if i > p - n {
                Some(i as f64 - p as f64)
            } else {
                None
            }
        };
        let mut kernel = vec![Complex::new(0.0, 0.0); px * pz];
        for ix in 0..px {
            let Some(dx) = offset(ix, lattice.nx, px) else { continue };
            for iz in 0..pz {
                let Some(dz) = offset(iz, lattice.nz, pz) else { continue };
                let r = (dx * lattice.hx).hypot(dz * lattice.hz);
                kernel[ix * pz + iz].re = profile.eval(r);
            }
        }
        let mut conv = LatticeConvolver {
            px,
            pz,
            index: lattice.index.clone(),
            kernel_hat: Vec::new(),
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
        };
        conv.fft2(&mut kernel, false);
        conv.kernel_hat = kernel;
        conv
    }

    /// `out[l] = sum_k f(|r_l - r_k|) values[k]`, in node order.
    pub(crate) fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.px * self.pz];
        for (&(ix, iz), &v) in self.index.iter().zip(values) {
            buf[ix * self.pz + iz].re = v;
        }
        self.fft2(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.fft2(&mut buf, true);
        let norm = 1.0 / (self.px * self.pz) as f64;
        self.index.iter().map(|&(ix, iz)| buf[ix * self.pz + iz].re * norm).collect()
    }

    fn fft2(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (rows, cols) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        rows.process(buf);
        let mut t = transpose(buf, self.px, self.pz);
        cols.process(&mut t);
        buf.copy_from_slice(&transpose(&t, self.pz, self.px));
    }
}

fn transpose(a: &[Complex<f64>], rows: usize, cols: usize) -> Vec<Complex<f64>> {
    let mut t = vec![Complex::new(0.0, 0.0); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

//! Unitary-direction FFT helpers for one- and two-dimensional grids.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::grid::TransverseGrid;

/// Forward and inverse transforms on a [`TransverseGrid`].
///
/// `forward` is the unnormalised DFT `sum_j u_j e^{-i xi_k x_j}` (up to the
/// index origin); `inverse` includes the `1/n^d` factor, so
/// `inverse(forward(u)) = u`.
#[derive(Clone)]
pub struct SpectralPlan {
    n: usize,
    d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("n", &self.n).field("d", &self.d).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: &TransverseGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Self { n, d: grid.dim(), fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn apply(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        plan.process(data);
        if self.d == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                plan.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
    }

    /// In-place unnormalised forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(&self.fwd, data);
    }

    /// In-place unnormalised inverse transform (no `1/n^d` factor).
    pub fn inverse_raw(&self, data: &mut [Complex64]) {
        self.apply(&self.inv, data);
    }

    /// In-place normalised inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_raw(data);
        let s = 1.0 / (self.n.pow(self.d as u32) as f64);
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

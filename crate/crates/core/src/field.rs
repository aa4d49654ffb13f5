//! Complex wave fields sampled on a transverse grid.

use num_complex::Complex64;

use crate::grid::TransverseGrid;
use crate::regime::RegimeScaling;

/// Samples of `u(z, .)` on a periodic transverse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub values: Vec<Complex64>,
    pub z: f64,
    pub grid: TransverseGrid,
    pub scaling: RegimeScaling,
}

impl WaveField {
    pub fn zeros(grid: TransverseGrid, scaling: RegimeScaling) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); grid.len()], z: 0.0, grid, scaling }
    }

    /// Squared discrete L2 norm `sum |u|^2 dx^d`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Fraction of `norm_sq` carried by nodes outside the central half of
    /// the box along any axis.
    pub fn boundary_energy(&self) -> f64 {
        let n = self.grid.n();
        let (lo, hi) = (n / 4, 3 * n / 4);
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(f, _)| self.grid.unflat(*f).iter().any(|&i| i < lo || i >= hi))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        outer / total
    }

    /// Intensity `|u|^2` at every node.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

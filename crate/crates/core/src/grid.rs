//! Periodic transverse grids.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A periodic square grid of `n^d` nodes on a box of side `length`.
///
/// Nodes sit at `x_j = (j - n/2) * dx` along every axis, so index `n/2`
/// is the origin. Flat indices are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseGrid {
    d: usize,
    n: usize,
    length: f64,
}

impl TransverseGrid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Config(format!("grid dimension {d} not supported (1 or 2)")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid.n = {n} must be a power of two >= 2")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("grid.L = {length} must be positive")));
        }
        Ok(Self { d, n, length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Angular wavenumber of FFT bin `i` (standard FFT ordering).
    pub fn wavenumber(&self, i: usize) -> f64 {
        let k = if i < self.n / 2 { i as i64 } else { i as i64 - self.n as i64 };
        2.0 * PI * k as f64 / self.length
    }

    /// Largest resolvable wavenumber `pi / dx`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Flat index of the node at the origin.
    pub fn center(&self) -> usize {
        self.flat(&vec![self.n / 2; self.d])
    }

    /// Flat index from per-axis indices.
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Per-axis indices from a flat index.
    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Physical position of a flat node index.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat).into_iter().map(|i| self.coord(i)).collect()
    }

    /// Wavevector of a flat spectral index.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat).into_iter().map(|i| self.wavenumber(i)).collect()
    }

    /// `|xi|^2` for every spectral bin, in flat order.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|f| self.wavevector(f).iter().map(|k| k * k).sum())
            .collect()
    }

    /// Map a physical point to the flat index of the node it sits on.
    ///
    /// Fails when the point is further than `1e-9 dx` from every node or
    /// lies outside the box.
    pub fn node_at(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.d {
            return Err(Error::Config(format!(
                "point has {} coordinates, grid has dimension {}",
                x.len(),
                self.d
            )));
        }
        let dx = self.spacing();
        let mut idx = Vec::with_capacity(self.d);
        for &xi in x {
            let t = xi / dx + (self.n / 2) as f64;
            let r = t.round();
            if (t - r).abs() > 1e-9 || r < 0.0 || r >= self.n as f64 {
                return Err(Error::Config(format!("point {xi} is not a grid node")));
            }
            idx.push(r as usize);
        }
        Ok(self.flat(&idx))
    }
}

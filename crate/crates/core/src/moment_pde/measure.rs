//! Discrete complex measures on the dual grid `(xi_1..xi_p, zeta_1..zeta_q)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::KahanSum;

/// Largest number of nodes a measure may hold.
pub const MAX_MEASURE_NODES: usize = 1 << 24;

/// Complex nodal values on a cube of `n^(p+q)` nodes with spacing `h`.
///
/// Axis `a` carries the coordinate `(i_a - n/2) h`; axes `0..p` are the
/// unconjugated variables and axes `p..p+q` the conjugated ones. Storage
/// is row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub h: f64,
    pub values: Vec<Complex64>,
}

impl GridMeasure {
    pub fn zeros(p: usize, q: usize, n: usize, h: f64) -> Result<Self> {
        let axes = p + q;
        if axes == 0 || n < 2 {
            return Err(Error::Config(format!("measure needs p + q >= 1 and n >= 2, got p + q = {axes}, n = {n}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("grid spacing h = {h} must be positive")));
        }
        let len = (n as u128).checked_pow(axes as u32).filter(|&l| l <= MAX_MEASURE_NODES as u128);
        let len = len.ok_or_else(|| Error::Size(format!("{n}^{axes} nodes exceed {MAX_MEASURE_NODES}")))?;
        Ok(Self { p, q, n, h, values: vec![Complex64::new(0.0, 0.0); len as usize] })
    }

    /// Sample `f` at every node.
    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(p: usize, q: usize, n: usize, h: f64, mut f: F) -> Result<Self> {
        let mut m = Self::zeros(p, q, n, h)?;
        let mut v = vec![0.0; p + q];
        for i in 0..m.values.len() {
            m.coords_into(i, &mut v);
            m.values[i] = f(&v);
        }
        Ok(m)
    }

    /// Product of centred gaussians `exp(-w^2 v_a^2 / 2)` shifted by `centers`.
    pub fn gaussian_product(p: usize, q: usize, n: usize, h: f64, width: f64, centers: &[f64]) -> Result<Self> {
        if centers.len() != p + q {
            return Err(Error::Config(format!("need {} centers, got {}", p + q, centers.len())));
        }
        Self::from_fn(p, q, n, h, |v| {
            let e: f64 = v.iter().zip(centers).map(|(x, c)| (x - c) * (x - c)).sum();
            Complex64::new((-0.5 * width * width * e).exp(), 0.0)
        })
    }

    pub fn axes(&self) -> usize {
        self.p + self.q
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.h
    }

    /// Flat-index stride of axis `a`.
    pub fn stride(&self, a: usize) -> usize {
        self.n.pow((self.axes() - 1 - a) as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.axes() as i32)
    }

    pub fn coords_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in (0..self.axes()).rev() {
            out[a] = self.coord(rem % self.n);
            rem /= self.n;
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.axes()];
        self.coords_into(flat, &mut v);
        v
    }

    /// Total variation `sum |values| h^(p+q)`.
    pub fn tv_norm(&self) -> f64 {
        let mut s = KahanSum::new();
        self.values.iter().for_each(|v| s.add(v.norm()));
        s.value() * self.cell_volume()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.p == other.p && self.q == other.q && self.n == other.n && self.h == other.h
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Config("measures live on different grids".into()))
        }
    }

    /// `self + c other`.
    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Total variation of `self - other`.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        let mut s = KahanSum::new();
        self.values.iter().zip(&other.values).for_each(|(a, b)| s.add((a - b).norm()));
        Ok(s.value() * self.cell_volume())
    }

    /// Multiply every node by `exp(i c v^T Theta v / 2)`.
    pub fn modulate_quadratic(&mut self, c: f64) {
        let mut v = vec![0.0; self.axes()];
        let p = self.p;
        for i in 0..self.values.len() {
            self.coords_into(i, &mut v);
            let form: f64 = v.iter().enumerate().map(|(a, x)| if a < p { x * x } else { -x * x }).sum();
            self.values[i] *= Complex64::from_polar(1.0, 0.5 * c * form);
        }
    }
}

//! Incident beams: superpositions of plane waves with wide gaussian envelopes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::TransverseGrid;
use crate::quadrature::{integrate, QuadOptions};
use crate::regime::RegimeScaling;

/// One term `f(r) e^{i k.x}` with `f(r) = A exp(-|r - c|^2 / (2 w^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamComponent {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub kvec: Vec<f64>,
}

impl BeamComponent {
    pub fn centered(amplitude: f64, width: f64, dim: usize) -> Self {
        Self { amplitude, width, center: vec![0.0; dim], kvec: vec![0.0; dim] }
    }
}

/// Sampling frame for [`eval_beam`].
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// Physical coordinates `x`: samples `sum f_m(eps^beta x) e^{i k_m.x}`.
    Raw,
    /// Microscopic coordinates around the macroscopic point `r`:
    /// samples the incident field at `eps^-beta r + eta x`.
    Rescaled(Vec<f64>),
}

/// The incident field `u0(x) = sum_m f_m(eps^beta x) e^{i k_m.x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    components: Vec<BeamComponent>,
    dim: usize,
}

impl BeamSpec {
    pub fn new(components: Vec<BeamComponent>, dim: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("beam needs at least one component".into()));
        }
        for (m, c) in components.iter().enumerate() {
            if c.center.len() != dim || c.kvec.len() != dim {
                return Err(Error::Config(format!(
                    "beam component {m}: center and kvec must have {dim} entries"
                )));
            }
            if !(c.width.is_finite() && c.width > 0.0) {
                return Err(Error::Config(format!("beam component {m}: width must be positive")));
            }
            if !c.amplitude.is_finite() || c.center.iter().chain(&c.kvec).any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("beam component {m}: non-finite parameter")));
            }
        }
        for i in 0..components.len() {
            for j in i + 1..components.len() {
                if components[i].kvec == components[j].kvec {
                    return Err(Error::Config(format!(
                        "beam components {i} and {j} share the wavevector {:?}",
                        components[i].kvec
                    )));
                }
            }
        }
        Ok(Self { components, dim })
    }

    /// A single centered gaussian with zero carrier.
    pub fn gaussian(amplitude: f64, width: f64, dim: usize) -> Result<Self> {
        Self::new(vec![BeamComponent::centered(amplitude, width, dim)], dim)
    }

    pub fn components(&self) -> &[BeamComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the beam is a single envelope with zero carrier.
    pub fn is_envelope(&self) -> bool {
        self.components.len() == 1 && self.components[0].kvec.iter().all(|&k| k == 0.0)
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.kvec.iter().map(|k| k * k).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Envelope `f_m(r)`.
    pub fn envelope(&self, m: usize, r: &[f64]) -> f64 {
        let c = &self.components[m];
        let d2: f64 = r.iter().zip(&c.center).map(|(a, b)| (a - b) * (a - b)).sum();
        c.amplitude * (-d2 / (2.0 * c.width * c.width)).exp()
    }

    /// Envelope transform `f^_m(xi) = A (2 pi w^2)^{d/2} e^{-i xi.c} e^{-w^2 |xi|^2 / 2}`.
    pub fn envelope_ft(&self, m: usize, xi: &[f64]) -> Complex64 {
        let c = &self.components[m];
        let w2 = c.width * c.width;
        let xx: f64 = xi.iter().map(|v| v * v).sum();
        let xc: f64 = xi.iter().zip(&c.center).map(|(a, b)| a * b).sum();
        let mag = c.amplitude * (2.0 * PI * w2).powf(self.dim as f64 / 2.0) * (-w2 * xx / 2.0).exp();
        Complex64::from_polar(mag, -xc)
    }

    /// `sum_m |f_m(r)|^2`, the intensity profile that survives averaging
    /// over the fast carrier phases.
    pub fn envelope_intensity(&self, r: &[f64]) -> f64 {
        (0..self.components.len()).map(|m| self.envelope(m, r).powi(2)).sum()
    }

    /// `|sum_m f_m(r)|^2` for the coherent envelope sum.
    pub fn coherent_intensity(&self, r: &[f64]) -> f64 {
        let s: f64 = (0..self.components.len()).map(|m| self.envelope(m, r)).sum();
        s * s
    }

    /// Incident field at physical point `x`.
    pub fn value_raw(&self, scaling: &RegimeScaling, x: &[f64]) -> Complex64 {
        let s = scaling.source_scale();
        let r: Vec<f64> = x.iter().map(|v| s * v).collect();
        self.components
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let phase: f64 = c.kvec.iter().zip(x).map(|(k, v)| k * v).sum();
                Complex64::from_polar(self.envelope(m, &r), phase)
            })
            .sum()
    }

    /// Incident field at `eps^-beta r + eta x`.
    pub fn value_rescaled(&self, scaling: &RegimeScaling, r: &[f64], x: &[f64]) -> Complex64 {
        let s = scaling.source_scale();
        let eta = scaling.eta();
        let rr: Vec<f64> = r.iter().zip(x).map(|(a, b)| a + s * eta * b).collect();
        self.components
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let phase: f64 = c
                    .kvec
                    .iter()
                    .zip(r.iter().zip(x))
                    .map(|(k, (a, b))| k * (a / s + eta * b))
                    .sum();
                Complex64::from_polar(self.envelope(m, &rr), phase)
            })
            .sum()
    }

    /// `sum_m (2 pi)^-d int eps^{-d beta} |f^_m(eps^-beta xi)| dxi`, by quadrature.
    pub fn fourier_tv_bound(&self, scaling: &RegimeScaling) -> Result<f64> {
        let s = scaling.source_scale();
        let mut total = 0.0;
        for c in &self.components {
            let w = c.width;
            let reach = 40.0 * s / w;
            let axis = integrate(
                |xi: f64| (2.0 * PI).sqrt() * w / s * (-(w * xi / s).powi(2) / 2.0).exp() / (2.0 * PI),
                -reach,
                reach,
                QuadOptions::new(1e-14, 1e-12),
            )?
            .value;
            total += c.amplitude.abs() * axis.powi(self.dim as i32);
        }
        Ok(total)
    }
}

/// Sample the incident beam on `grid` in the requested frame.
pub fn eval_beam(
    spec: &BeamSpec,
    grid: &TransverseGrid,
    scaling: &RegimeScaling,
    frame: &Frame,
) -> Result<WaveField> {
    if spec.dim() != grid.dim() {
        return Err(Error::Config(format!(
            "beam dimension {} does not match grid dimension {}",
            spec.dim(),
            grid.dim()
        )));
    }
    let kmax = match frame {
        Frame::Raw => spec.max_wavenumber(),
        Frame::Rescaled(_) => scaling.eta() * spec.max_wavenumber(),
    };
    if kmax >= grid.nyquist() {
        return Err(Error::Config(format!(
            "grid spacing {} cannot resolve carrier wavenumber {kmax} (limit pi/dx = {})",
            grid.spacing(),
            grid.nyquist()
        )));
    }
    if let Frame::Rescaled(r) = frame {
        if r.len() != grid.dim() {
            return Err(Error::Config("rescaled frame offset has the wrong dimension".into()));
        }
    }
    let values = (0..grid.len())
        .map(|f| {
            let x = grid.position(f);
            match frame {
                Frame::Raw => spec.value_raw(scaling, &x),
                Frame::Rescaled(r) => spec.value_rescaled(scaling, r, &x),
            }
        })
        .collect();
    Ok(WaveField { values, z: 0.0, grid: grid.clone(), scaling: *scaling })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaling(eps: f64) -> RegimeScaling {
        RegimeScaling::kinetic(eps, 1.0, 1.0).unwrap()
    }

    #[test]
    fn plain_gaussian_beam() {
        let spec = BeamSpec::gaussian(2.0, 1.5, 1).unwrap();
        let grid = TransverseGrid::new(1, 64, 16.0).unwrap();
        let s = RegimeScaling::kinetic(1.0, 1.0, 1.0).unwrap();
        let u = eval_beam(&spec, &grid, &s, &Frame::Raw).unwrap();
        for f in 0..grid.len() {
            let x = grid.coord(f);
            let expect = 2.0 * (-x * x / (2.0 * 1.5 * 1.5)).exp();
            assert!((u.values[f] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn two_components_at_origin() {
        let comps = vec![
            BeamComponent { amplitude: 1.0, width: 2.0, center: vec![0.5], kvec: vec![1.0] },
            BeamComponent { amplitude: 0.5, width: 1.0, center: vec![-0.3], kvec: vec![-2.0] },
        ];
        let spec = BeamSpec::new(comps, 1).unwrap();
        let grid = TransverseGrid::new(1, 64, 16.0).unwrap();
        let s = scaling(0.5);
        let u = eval_beam(&spec, &grid, &s, &Frame::Rescaled(vec![0.0])).unwrap();
        let expect = spec.envelope(0, &[0.0]) + spec.envelope(1, &[0.0]);
        assert!((u.values[grid.center()] - expect).norm() < 1e-15);
    }

    #[test]
    fn tv_bound_independent_of_epsilon() {
        let comps = vec![
            BeamComponent { amplitude: 1.5, width: 0.7, center: vec![0.0, 0.2], kvec: vec![0.0, 0.0] },
            BeamComponent { amplitude: -0.5, width: 2.0, center: vec![1.0, 0.0], kvec: vec![1.0, 0.0] },
        ];
        let spec = BeamSpec::new(comps, 2).unwrap();
        let vals: Vec<f64> = [1.0, 0.1, 0.01]
            .iter()
            .map(|&e| spec.fourier_tv_bound(&RegimeScaling::kinetic(e, 1.0, 1.0).unwrap()).unwrap())
            .collect();
        for v in &vals {
            assert!((v - 2.0).abs() < 1e-10, "{vals:?}");
        }
    }

    #[test]
    fn halving_epsilon_doubles_support() {
        let spec = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 1024, 256.0).unwrap();
        let width = |eps: f64| {
            let u = eval_beam(&spec, &grid, &scaling(eps), &Frame::Raw).unwrap();
            let i = u.intensity();
            let m0: f64 = i.iter().sum();
            let m2: f64 = i.iter().enumerate().map(|(f, v)| grid.coord(f).powi(2) * v).sum();
            (m2 / m0).sqrt()
        };
        let ratio = width(0.05) / width(0.1);
        assert!((ratio - 2.0).abs() < 1e-10, "{ratio}");
    }

    #[test]
    fn aliasing_is_rejected() {
        let comps = vec![BeamComponent { amplitude: 1.0, width: 1.0, center: vec![0.0], kvec: vec![10.0] }];
        let spec = BeamSpec::new(comps, 1).unwrap();
        let grid = TransverseGrid::new(1, 32, 32.0).unwrap();
        assert!(matches!(
            eval_beam(&spec, &grid, &scaling(0.5), &Frame::Raw),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn duplicate_wavevectors_rejected() {
        let c = BeamComponent::centered(1.0, 1.0, 1);
        assert!(BeamSpec::new(vec![c.clone(), c], 1).is_err());
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let spec = BeamSpec::gaussian(0.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 32, 8.0).unwrap();
        let u = eval_beam(&spec, &grid, &scaling(0.5), &Frame::Raw).unwrap();
        assert_eq!(u.norm_sq(), 0.0);
    }
}

//! The heat kernel `G` and the `z^3` mean-intensity diffusion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beam::BeamSpec;
use crate::error::{Error, Result};
use crate::fft::SpectralPlan;
use crate::grid::TransverseGrid;

/// Check that the `d x d` row-major matrix `gamma` is symmetric negative
/// definite.
pub fn negative_definite(gamma: &[f64], d: usize) -> Result<()> {
    if gamma.len() != d * d {
        return Err(Error::Config(format!("Hessian has {} entries, expected {}", gamma.len(), d * d)));
    }
    let ok = match d {
        1 => gamma[0] < 0.0,
        2 => {
            gamma[1] == gamma[2] && gamma[0] < 0.0 && gamma[0] * gamma[3] - gamma[1] * gamma[2] > 0.0
        }
        _ => return Err(Error::Unsupported(format!("Hessian checks support d <= 2, got {d}"))),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Model(format!("Hessian {gamma:?} is not symmetric negative definite")))
    }
}

/// `xi^T gamma xi`.
pub(crate) fn quad_form(gamma: &[f64], v: &[f64]) -> f64 {
    let d = v.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += v[i] * gamma[i * d + j] * v[j];
        }
    }
    acc
}

/// Green's function of `dG/dt + (1/24) div(gamma grad G) = 0`: the centered
/// gaussian density with covariance `-gamma t / 12`.
pub fn green_g(gamma: &[f64], t: f64, r: &[f64]) -> Result<f64> {
    let d = r.len();
    negative_definite(gamma, d)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    let sigma: Vec<f64> = gamma.iter().map(|g| -g * t / 12.0).collect();
    let (det, inv) = match d {
        1 => (sigma[0], vec![1.0 / sigma[0]]),
        _ => {
            let det = sigma[0] * sigma[3] - sigma[1] * sigma[2];
            (det, vec![sigma[3] / det, -sigma[1] / det, -sigma[2] / det, sigma[0] / det])
        }
    };
    let norm = ((2.0 * PI).powi(d as i32) * det).sqrt();
    Ok((-0.5 * quad_form(&inv, r)).exp() / norm)
}

/// Mean intensity sampled on an `r`-grid at several distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionField {
    pub grid: TransverseGrid,
    pub z: Vec<f64>,
    /// `values[k][f]` is `I_2(z[k], r_f)`.
    pub values: Vec<Vec<f64>>,
}

impl DiffusionField {
    /// `int I_2(z[k], r) dr` by the grid sum.
    pub fn mass(&self, k: usize) -> f64 {
        self.values[k].iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Centroid of `I_2(z[k], .)`.
    pub fn mean(&self, k: usize) -> Vec<f64> {
        let d = self.grid.dim();
        let mass: f64 = self.values[k].iter().sum();
        let mut c = vec![0.0; d];
        for (f, v) in self.values[k].iter().enumerate() {
            for (ci, ri) in c.iter_mut().zip(self.grid.position(f)) {
                *ci += v * ri;
            }
        }
        c.iter().map(|v| v / mass).collect()
    }

    /// Row-major `d x d` second central moment of `I_2(z[k], .)` after
    /// normalizing to unit mass.
    pub fn covariance(&self, k: usize) -> Vec<f64> {
        let d = self.grid.dim();
        let mu = self.mean(k);
        let mass: f64 = self.values[k].iter().sum();
        let mut c = vec![0.0; d * d];
        for (f, v) in self.values[k].iter().enumerate() {
            let p = self.grid.position(f);
            for i in 0..d {
                for j in 0..d {
                    c[i * d + j] += v * (p[i] - mu[i]) * (p[j] - mu[j]);
                }
            }
        }
        c.iter().map(|v| v / mass).collect()
    }
}

/// Apply the heat semigroup `exp(t xi^T gamma xi / 24)` to `data` in place.
pub(crate) fn heat_evolve(
    plan: &SpectralPlan,
    grid: &TransverseGrid,
    gamma: &[f64],
    t: f64,
    data: &mut [Complex64],
) {
    plan.forward(data);
    for (f, v) in data.iter_mut().enumerate() {
        *v *= (t * quad_form(gamma, &grid.wavevector(f)) / 24.0).exp();
    }
    plan.inverse(data);
}

/// Solve `dI/d(z^3) + (1/24) div(gamma grad I) = 0` from the envelope
/// intensity `sum_m |f_m|^2` by exact spectral exponentiation on the
/// periodic grid. Negative values at rounding level are set to zero.
pub fn solve_i2(beam: &BeamSpec, gamma: &[f64], z_list: &[f64], grid: &TransverseGrid) -> Result<DiffusionField> {
    let d = grid.dim();
    if beam.dim() != d {
        return Err(Error::Config(format!("beam dimension {} does not match grid {d}", beam.dim())));
    }
    negative_definite(gamma, d)?;
    if let Some(z) = z_list.iter().find(|z| !(z.is_finite() && **z >= 0.0)) {
        return Err(Error::Domain(format!("diffusion distances must be >= 0, got {z}")));
    }
    let plan = SpectralPlan::new(grid);
    let initial: Vec<Complex64> = (0..grid.len())
        .map(|f| Complex64::new(beam.envelope_intensity(&grid.position(f)), 0.0))
        .collect();
    let values = z_list
        .iter()
        .map(|&z| {
            if z == 0.0 {
                return initial.iter().map(|v| v.re).collect();
            }
            let mut data = initial.clone();
            heat_evolve(&plan, grid, gamma, z * z * z, &mut data);
            data.iter().map(|v| v.re.max(0.0)).collect()
        })
        .collect();
    Ok(DiffusionField { grid: grid.clone(), z: z_list.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    #[test]
    fn unit_covariance_density() {
        let g = green_g(&[-1.0], 12.0, &[0.0]).unwrap();
        assert!((g - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn normalized() {
        for t in [0.1, 1.0, 30.0] {
            let q = integrate(|r: f64| green_g(&[-2.0], t, &[r]).unwrap(), -60.0, 60.0, QuadOptions::default())
                .unwrap();
            assert!((q.value - 1.0).abs() < 1e-10);
        }
        let gamma = [-1.0, 0.3, 0.3, -0.5];
        let q = integrate(
            |a: f64| {
                integrate(|b: f64| green_g(&gamma, 6.0, &[a, b]).unwrap(), -30.0, 30.0, QuadOptions::default())
                    .unwrap()
                    .value
            },
            -30.0,
            30.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn satisfies_the_heat_equation() {
        let gamma = [-1.5];
        let (h, dt) = (1e-3, 1e-4);
        for (t, r) in [(2.0, 0.3), (5.0, -1.0), (10.0, 2.0)] {
            let g = |t: f64, r: f64| green_g(&gamma, t, &[r]).unwrap();
            let gt = (g(t + dt, r) - g(t - dt, r)) / (2.0 * dt);
            let grr = (g(t, r + h) - 2.0 * g(t, r) + g(t, r - h)) / (h * h);
            assert!((gt + gamma[0] * grr / 24.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(green_g(&[-1.0], 0.0, &[0.0]), Err(Error::Domain(_))));
        assert!(matches!(green_g(&[1.0], 1.0, &[0.0]), Err(Error::Model(_))));
        assert!(matches!(green_g(&[-1.0, 2.0, 2.0, -1.0], 1.0, &[0.0, 0.0]), Err(Error::Model(_))));
    }

    #[test]
    fn mass_and_variance() {
        let beam = BeamSpec::gaussian(1.0, 2.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 1024, 200.0).unwrap();
        let zs = [0.0, 0.5, 1.0, 2.0, 4.0];
        let field = solve_i2(&beam, &[-1.0], &zs, &grid).unwrap();
        let m0 = field.mass(0);
        let v0 = field.covariance(0)[0];
        assert!((v0 - 2.0).abs() < 1e-10);
        for (k, z) in zs.iter().enumerate() {
            assert!((field.mass(k) - m0).abs() < 1e-12 * m0);
            let v = field.covariance(k)[0];
            let expect = v0 + z * z * z / 12.0;
            assert!((v - expect).abs() < 1e-8 * expect, "z={z}: {v} vs {expect}");
            assert!(field.values[k].iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn two_dimensional_variance() {
        let beam = BeamSpec::gaussian(1.0, 1.5, 2).unwrap();
        let grid = TransverseGrid::new(2, 128, 48.0).unwrap();
        let gamma = [-1.0, 0.2, 0.2, -0.6];
        let field = solve_i2(&beam, &gamma, &[0.0, 2.0], &grid).unwrap();
        let c0 = field.covariance(0);
        let c1 = field.covariance(1);
        for i in 0..4 {
            let expect = c0[i] - gamma[i] * 8.0 / 12.0;
            assert!((c1[i] - expect).abs() < 1e-8 * expect.abs().max(1.0));
        }
    }
}

//! Scaling limits of the two-point function in the kinetic and diffusive
//! regimes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beam::BeamSpec;
use crate::covariance::{q_kernel_with, CovarianceModel, LineIntegral};
use crate::error::{Error, Result};
use crate::fft::SpectralPlan;
use crate::grid::TransverseGrid;
use crate::quadrature::{integrate, QuadOptions};
use crate::regime::{Regime, RegimeScaling};

use super::diffusion::{heat_evolve, negative_definite, quad_form};
use super::second::MomentQuery;

/// Whether the source width exponent is exactly one or larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaCase {
    Unit,
    Wide,
}

impl BetaCase {
    pub fn of(scaling: &RegimeScaling) -> Self {
        if scaling.beta() == 1.0 {
            Self::Unit
        } else {
            Self::Wide
        }
    }
}

fn require(scaling: &RegimeScaling, regime: Regime) -> Result<()> {
    if scaling.regime() != regime {
        return Err(Error::Domain(format!(
            "limit evaluator for the {regime:?} regime called with a {:?} scaling",
            scaling.regime()
        )));
    }
    Ok(())
}

fn check_dims(beam: &BeamSpec, model: &CovarianceModel, d: usize) -> Result<()> {
    if beam.dim() != d || model.dim() != d {
        return Err(Error::Config(format!(
            "query dimension {d} does not match beam ({}) and covariance ({})",
            beam.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// Transform of `|f_m|^2`: `A^2 (pi w^2)^{d/2} e^{-i xi.c} e^{-w^2 |xi|^2 / 4}`.
fn intensity_ft(beam: &BeamSpec, m: usize, xi: &[f64]) -> Complex64 {
    let c = &beam.components()[m];
    let w2 = c.width * c.width;
    let xx: f64 = xi.iter().map(|v| v * v).sum();
    let xc: f64 = xi.iter().zip(&c.center).map(|(a, b)| a * b).sum();
    let mag = c.amplitude * c.amplitude * (PI * w2).powf(xi.len() as f64 / 2.0) * (-w2 * xx / 4.0).exp();
    Complex64::from_polar(mag, -xc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One diagonal term `I_mm` of the kinetic limit. With `centered` the
/// squared limiting mean field is removed.
fn kinetic_term(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
    case: BetaCase,
    m: usize,
    centered: bool,
) -> Result<Complex64> {
    let d = q.dim();
    let tau = q.tau();
    let k0 = scaling.k0();
    let km = &beam.components()[m].kvec;
    let floor = if centered { (-k0 * k0 * q.z * model.variance() / 4.0).exp() } else { 0.0 };
    let carrier = Complex64::cis(-dot(km, &tau));
    let coherence = |xi: &[f64]| q_kernel_with(model, &tau, xi, q.z, scaling, LineIntegral::Auto);
    match case {
        BetaCase::Wide => {
            let f = beam.envelope(m, &q.r);
            Ok(carrier * f * f * (coherence(&vec![0.0; d])? - floor))
        }
        BetaCase::Unit => {
            let shift: Vec<f64> = (0..d).map(|i| q.r[i] - km[i] * q.z / k0).collect();
            let w = beam.components()[m].width;
            let reach = 14.0 / w;
            let mut failure = None;
            let mut integrand = |xi: &[f64]| -> Complex64 {
                match coherence(xi) {
                    Ok(c) => intensity_ft(beam, m, xi) * Complex64::cis(dot(xi, &shift)) * (c - floor),
                    Err(e) => {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            };
            let scale = beam.components()[m].amplitude.powi(2) * (PI * w * w).powf(d as f64 / 2.0);
            let opts = QuadOptions::new(1e-14 * scale * reach.powi(d as i32), 1e-11);
            let value = match d {
                1 => integrate(|a: f64| integrand(&[a]), -reach, reach, opts)?.value,
                _ => {
                    let mut inner_fail = None;
                    let v = integrate(
                        |a: f64| match integrate(|b: f64| integrand(&[a, b]), -reach, reach, opts) {
                            Ok(r) => r.value,
                            Err(e) => {
                                inner_fail.get_or_insert(e);
                                Complex64::new(0.0, 0.0)
                            }
                        },
                        -reach,
                        reach,
                        opts,
                    )?
                    .value;
                    if let Some(e) = inner_fail {
                        return Err(e);
                    }
                    v
                }
            };
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(carrier * value / (2.0 * PI).powi(d as i32))
        }
    }
}

/// Kinetic limit of the two-point function.
///
/// A single envelope beam with zero carrier gives the limit `M_{1,1}` of
/// `m_{1,1}`. A beam with nonzero carriers gives the limit of the centered
/// two-point function, which keeps only the diagonal terms `m = n`.
pub fn m11_limit_kinetic(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
    case: BetaCase,
) -> Result<Complex64> {
    require(scaling, Regime::Kinetic)?;
    check_dims(beam, model, q.dim())?;
    if beam.is_envelope() {
        return kinetic_term(beam, scaling, model, q, case, 0, false);
    }
    (0..beam.components().len())
        .map(|m| kinetic_term(beam, scaling, model, q, case, m, true))
        .sum()
}

/// The `(m, n)` term of the centered kinetic limit. Cross terms `m != n`
/// vanish in the limit.
pub fn kinetic_cross_term(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
    case: BetaCase,
    m: usize,
    n: usize,
) -> Result<Complex64> {
    require(scaling, Regime::Kinetic)?;
    check_dims(beam, model, q.dim())?;
    let count = beam.components().len();
    if m >= count || n >= count {
        return Err(Error::Config(format!("component index ({m}, {n}) out of range for {count} components")));
    }
    if m != n {
        return Ok(Complex64::new(0.0, 0.0));
    }
    kinetic_term(beam, scaling, model, q, case, m, true)
}

fn sampled_intensity(beam: &BeamSpec, grid: &TransverseGrid, m: usize) -> Vec<Complex64> {
    (0..grid.len())
        .map(|f| Complex64::new(beam.envelope(m, &grid.position(f)).powi(2), 0.0))
        .collect()
}

/// The kinetic limit at every node `r` of `grid` for fixed `z` and
/// `tau = y - x`, using an FFT over `r` for `beta = 1`. Centering follows
/// [`m11_limit_kinetic`].
pub fn m11_limit_kinetic_grid(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    tau: &[f64],
    case: BetaCase,
    grid: &TransverseGrid,
) -> Result<Vec<Complex64>> {
    require(scaling, Regime::Kinetic)?;
    check_dims(beam, model, grid.dim())?;
    if tau.len() != grid.dim() {
        return Err(Error::Config("tau dimension does not match the grid".into()));
    }
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::Domain(format!("limit needs z >= 0, got {z}")));
    }
    let k0 = scaling.k0();
    let centered = !beam.is_envelope();
    let floor = if centered { (-k0 * k0 * z * model.variance() / 4.0).exp() } else { 0.0 };
    let plan = SpectralPlan::new(grid);
    let mut total = vec![Complex64::new(0.0, 0.0); grid.len()];
    for m in 0..beam.components().len() {
        let km = &beam.components()[m].kvec;
        let carrier = Complex64::cis(-dot(km, tau));
        let mut data = sampled_intensity(beam, grid, m);
        match case {
            BetaCase::Wide => {
                let c = q_kernel_with(model, tau, &vec![0.0; tau.len()], z, scaling, LineIntegral::Auto)?;
                for v in data.iter_mut() {
                    *v *= c - floor;
                }
            }
            BetaCase::Unit => {
                plan.forward(&mut data);
                for (f, v) in data.iter_mut().enumerate() {
                    let xi = grid.wavevector(f);
                    let c = q_kernel_with(model, tau, &xi, z, scaling, LineIntegral::Auto)?;
                    *v *= (c - floor) * Complex64::cis(-dot(&xi, km) * z / k0);
                }
                plan.inverse(&mut data);
            }
        }
        for (t, v) in total.iter_mut().zip(data) {
            *t += carrier * v;
        }
    }
    Ok(total)
}

fn diffusive_setup(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    d: usize,
) -> Result<Vec<f64>> {
    require(scaling, Regime::Diffusive)?;
    check_dims(beam, model, d)?;
    let gamma = model.hessian_at_zero()?;
    negative_definite(&gamma, d)?;
    Ok(gamma)
}

/// Diffusive limit with and without the oscillatory phase
/// `e^{-i (3 k0 / 2z) tau . r}` and its counterpart inside the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusiveValue {
    pub phase_on: Complex64,
    pub phase_off: Complex64,
}

/// [`DiffusiveValue`] at every node of an `r`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusiveGrid {
    pub phase_on: Vec<Complex64>,
    pub phase_off: Vec<Complex64>,
}

/// The `beta = 1` diffusive limit on `grid` for fixed `z > 0` and
/// `tau = y - x`.
///
/// Refuses with a resolution error when the phase frequency
/// `3 k0 |tau| / (2z)` is not below the grid Nyquist wavenumber.
pub fn m11_limit_diffusive_grid(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    tau: &[f64],
    grid: &TransverseGrid,
) -> Result<DiffusiveGrid> {
    let d = grid.dim();
    let gamma = diffusive_setup(beam, scaling, model, d)?;
    if tau.len() != d {
        return Err(Error::Config("tau dimension does not match the grid".into()));
    }
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::Domain(format!("limit needs z >= 0, got {z}")));
    }
    let initial: Vec<Complex64> = (0..grid.len())
        .map(|f| Complex64::new(beam.envelope_intensity(&grid.position(f)), 0.0))
        .collect();
    if z == 0.0 {
        return Ok(DiffusiveGrid { phase_on: initial.clone(), phase_off: initial });
    }
    let k0 = scaling.k0();
    let omega: Vec<f64> = tau.iter().map(|t| 1.5 * k0 * t / z).collect();
    let freq = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    if freq >= grid.nyquist() {
        return Err(Error::Resolution(format!(
            "phase frequency 3 k0 |y - x| / (2z) = {freq:.4} is not below the grid Nyquist wavenumber {:.4}; refine the r-grid or increase z",
            grid.nyquist()
        )));
    }
    let damping = (k0 * k0 * z * quad_form(&gamma, tau) / 32.0).exp();
    let plan = SpectralPlan::new(grid);
    let t = z * z * z;

    let mut off = initial.clone();
    heat_evolve(&plan, grid, &gamma, t, &mut off);
    for v in off.iter_mut() {
        *v *= damping;
    }

    let mut on: Vec<Complex64> = initial
        .iter()
        .enumerate()
        .map(|(f, v)| v * Complex64::cis(dot(&omega, &grid.position(f))))
        .collect();
    heat_evolve(&plan, grid, &gamma, t, &mut on);
    for (f, v) in on.iter_mut().enumerate() {
        *v *= damping * Complex64::cis(-dot(&omega, &grid.position(f)));
    }
    Ok(DiffusiveGrid { phase_on: on, phase_off: off })
}

/// Diffusive limit of the two-point function at one query.
///
/// For `beta > 1` the limit is pointwise and `grid` is unused. For
/// `beta = 1` the query point `r` must be a node of `grid`.
pub fn m11_limit_diffusive(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
    case: BetaCase,
    grid: &TransverseGrid,
) -> Result<DiffusiveValue> {
    let d = q.dim();
    let gamma = diffusive_setup(beam, scaling, model, d)?;
    let tau = q.tau();
    match case {
        BetaCase::Wide => {
            let k0 = scaling.k0();
            let v = beam.envelope_intensity(&q.r) * (k0 * k0 * q.z * quad_form(&gamma, &tau) / 8.0).exp();
            let c = Complex64::new(v, 0.0);
            Ok(DiffusiveValue { phase_on: c, phase_off: c })
        }
        BetaCase::Unit => {
            if q.z == 0.0 {
                let c = Complex64::new(beam.envelope_intensity(&q.r), 0.0);
                return Ok(DiffusiveValue { phase_on: c, phase_off: c });
            }
            let node = grid.node_at(&q.r)?;
            let g = m11_limit_diffusive_grid(beam, scaling, model, q.z, &tau, grid)?;
            Ok(DiffusiveValue { phase_on: g.phase_on[node], phase_off: g.phase_off[node] })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamComponent;
    use crate::moments::{second_moment, solve_i2};

    fn kinetic(beta: f64) -> RegimeScaling {
        RegimeScaling::kinetic(1e-3, beta, 1.0).unwrap()
    }

    fn diffusive(beta: f64) -> RegimeScaling {
        RegimeScaling::diffusive(1e-3, beta, 1.0).unwrap()
    }

    fn plane_waves() -> BeamSpec {
        BeamSpec::new(
            vec![
                BeamComponent { amplitude: 1.0, width: 1.0, center: vec![0.0], kvec: vec![1.0] },
                BeamComponent { amplitude: 0.5, width: 1.5, center: vec![0.5], kvec: vec![-2.0] },
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn wide_kinetic_closed_form() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let r = 0.4;
        let f2 = beam.envelope(0, &[r]).powi(2);
        let diag = MomentQuery::new(2.0, vec![r], vec![0.3], vec![0.3]).unwrap();
        let v = m11_limit_kinetic(&beam, &kinetic(2.0), &model, &diag, BetaCase::Wide).unwrap();
        assert!((v - f2).norm() < 1e-14);
        let off = MomentQuery::new(2.0, vec![r], vec![0.0], vec![1.0]).unwrap();
        let v = m11_limit_kinetic(&beam, &kinetic(2.0), &model, &off, BetaCase::Wide).unwrap();
        let expect = f2 * (0.5 * ((-0.5f64).exp() - 1.0)).exp();
        assert!((v - expect).norm() < 1e-12);
        assert!((expect / f2 - 0.8214).abs() < 1e-4);
    }

    #[test]
    fn kinetic_limits_start_from_beam_intensity() {
        let beam = BeamSpec::gaussian(1.3, 0.9, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        for r in [-0.5, 0.0, 0.8] {
            let q = MomentQuery::new(0.0, vec![r], vec![0.2], vec![0.9]).unwrap();
            let f2 = beam.envelope(0, &[r]).powi(2);
            for case in [BetaCase::Unit, BetaCase::Wide] {
                let v = m11_limit_kinetic(&beam, &kinetic(1.0), &model, &q, case).unwrap();
                assert!((v - f2).norm() < 1e-10, "{case:?}: {v} vs {f2}");
            }
        }
    }

    #[test]
    fn unit_kinetic_quadrature_matches_fft() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 256, 40.0).unwrap();
        let tau = [0.7];
        let g = m11_limit_kinetic_grid(&beam, &kinetic(1.0), &model, 1.5, &tau, BetaCase::Unit, &grid).unwrap();
        for f in (100..156).step_by(5) {
            let r = grid.position(f);
            let q = MomentQuery::new(1.5, r, vec![0.0], tau.to_vec()).unwrap();
            let v = m11_limit_kinetic(&beam, &kinetic(1.0), &model, &q, BetaCase::Unit).unwrap();
            assert!((v - g[f]).norm() < 1e-9, "{v} vs {}", g[f]);
        }
    }

    #[test]
    fn unit_kinetic_matches_finite_epsilon_moment() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let q = MomentQuery::new(1.0, vec![0.3], vec![-0.2], vec![0.4]).unwrap();
        let limit = m11_limit_kinetic(&beam, &kinetic(1.0), &model, &q, BetaCase::Unit).unwrap();
        let finite = second_moment(&beam, &kinetic(1.0), &model, &q).unwrap();
        assert!((limit - finite).norm() < 1e-3 * limit.norm(), "{limit} vs {finite}");
    }

    #[test]
    fn plane_wave_limits() {
        let beam = plane_waves();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let q = MomentQuery::new(1.0, vec![0.2], vec![0.0], vec![0.5]).unwrap();
        let s = kinetic(1.0);
        let cross = kinetic_cross_term(&beam, &s, &model, &q, BetaCase::Unit, 0, 1).unwrap();
        assert_eq!(cross, Complex64::new(0.0, 0.0));
        let total = m11_limit_kinetic(&beam, &s, &model, &q, BetaCase::Unit).unwrap();
        let diag: Complex64 = (0..2)
            .map(|m| kinetic_cross_term(&beam, &s, &model, &q, BetaCase::Unit, m, m).unwrap())
            .sum();
        assert!((total - diag).norm() < 1e-14);
        let z0 = MomentQuery::new(0.0, vec![0.2], vec![0.0], vec![0.0]).unwrap();
        let v = m11_limit_kinetic(&beam, &s, &model, &z0, BetaCase::Unit).unwrap();
        assert!(v.norm() < 1e-12);
        let grid = TransverseGrid::new(1, 256, 40.0).unwrap();
        let g = m11_limit_kinetic_grid(&beam, &s, &model, 1.0, &[0.5], BetaCase::Unit, &grid).unwrap();
        let f = grid.node_at(&[0.3125]).unwrap();
        let qf = MomentQuery::new(1.0, vec![0.3125], vec![0.0], vec![0.5]).unwrap();
        let vf = m11_limit_kinetic(&beam, &s, &model, &qf, BetaCase::Unit).unwrap();
        assert!((vf - g[f]).norm() < 1e-9);
    }

    #[test]
    fn kinetic_cauchy_schwarz() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let s = kinetic(1.0);
        for (x, y) in [(0.0, 0.5), (-0.4, 1.2), (0.9, -0.9)] {
            let m = |a: f64, b: f64| {
                let q = MomentQuery::new(1.2, vec![0.1], vec![a], vec![b]).unwrap();
                m11_limit_kinetic(&beam, &s, &model, &q, BetaCase::Unit).unwrap()
            };
            assert!(m(x, y).norm() <= (m(x, x).re * m(y, y).re).sqrt() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn wrong_regime_is_rejected() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let q = MomentQuery::new(1.0, vec![0.0], vec![0.0], vec![0.0]).unwrap();
        assert!(m11_limit_kinetic(&beam, &diffusive(2.0), &model, &q, BetaCase::Wide).is_err());
        let grid = TransverseGrid::new(1, 64, 10.0).unwrap();
        assert!(m11_limit_diffusive(&beam, &kinetic(2.0), &model, &q, BetaCase::Wide, &grid).is_err());
    }

    #[test]
    fn wide_diffusive_closed_form() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 64, 10.0).unwrap();
        let q = MomentQuery::new(2.0, vec![0.3], vec![-1.0], vec![1.0]).unwrap();
        let v = m11_limit_diffusive(&beam, &diffusive(2.0), &model, &q, BetaCase::Wide, &grid).unwrap();
        let f2 = beam.envelope(0, &[0.3]).powi(2);
        assert!((v.phase_on.re - f2 * (-1f64).exp()).abs() < 1e-14);
        assert_eq!(v.phase_on, v.phase_off);
    }

    #[test]
    fn unit_diffusive_against_quadrature() {
        let beam = BeamSpec::gaussian(1.0, 1.5, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 512, 80.0).unwrap();
        let (z, tau, k0) = (1.5, 0.6, 1.0);
        let g = m11_limit_diffusive_grid(&beam, &diffusive(1.0), &model, z, &[tau], &grid).unwrap();
        let omega = 1.5 * k0 * tau / z;
        let w: f64 = 1.5;
        let t = z * z * z;
        for f in (200..312).step_by(9) {
            let r = grid.position(f)[0];
            let integrand = |xi: f64| {
                let e = xi - omega;
                let fhat = PI.sqrt() * w * (-w * w * e * e / 4.0).exp();
                Complex64::from_polar(fhat * (-t * xi * xi / 24.0).exp(), xi * r)
            };
            let conv = integrate(integrand, omega - 30.0, omega + 30.0, QuadOptions::default()).unwrap().value
                / (2.0 * PI);
            let expect = conv * Complex64::cis(-omega * r) * (-k0 * k0 * z * tau * tau / 32.0).exp();
            assert!((g.phase_on[f] - expect).norm() < 1e-11, "{} vs {expect}", g.phase_on[f]);
        }
    }

    #[test]
    fn unit_diffusive_refuses_unresolved_phase() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 64, 64.0).unwrap();
        let r = m11_limit_diffusive_grid(&beam, &diffusive(1.0), &model, 0.1, &[1.0], &grid);
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn unit_diffusive_small_z_recovers_intensity() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 256, 32.0).unwrap();
        let g = m11_limit_diffusive_grid(&beam, &diffusive(1.0), &model, 1e-3, &[0.0], &grid).unwrap();
        for f in 0..grid.len() {
            let f2 = beam.envelope_intensity(&grid.position(f));
            assert!((g.phase_on[f] - f2).norm() < 1e-9);
        }
        let g0 = m11_limit_diffusive_grid(&beam, &diffusive(1.0), &model, 0.0, &[0.5], &grid).unwrap();
        assert_eq!(g0.phase_on[grid.center()].re, 1.0);
    }

    #[test]
    fn diagonal_matches_mean_intensity_solver() {
        let beam = plane_waves();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 512, 100.0).unwrap();
        let field = solve_i2(&beam, &[-1.0], &[2.0], &grid).unwrap();
        let g = m11_limit_diffusive_grid(&beam, &diffusive(1.0), &model, 2.0, &[0.0], &grid).unwrap();
        for f in 0..grid.len() {
            assert!((g.phase_on[f] - field.values[0][f]).norm() < 1e-12);
        }
    }

    #[test]
    fn diffusive_correlation_decays_along_rays() {
        let beam = BeamSpec::gaussian(1.0, 2.0, 1).unwrap();
        let model = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let grid = TransverseGrid::new(1, 512, 100.0).unwrap();
        let mut prev_wide = f64::INFINITY;
        let mut prev_unit = f64::INFINITY;
        for k in 0..8 {
            let tau = 0.25 * k as f64;
            let q = MomentQuery::new(2.0, vec![0.0], vec![0.0], vec![tau]).unwrap();
            let wide = m11_limit_diffusive(&beam, &diffusive(2.0), &model, &q, BetaCase::Wide, &grid).unwrap();
            let unit = m11_limit_diffusive(&beam, &diffusive(1.0), &model, &q, BetaCase::Unit, &grid).unwrap();
            assert!(wide.phase_on.norm() <= prev_wide);
            assert!(unit.phase_off.norm() <= prev_unit);
            prev_wide = wide.phase_on.norm();
            prev_unit = unit.phase_off.norm();
        }
    }
}

//! The two-point function `E[u(X) u*(Y)]` at finite `epsilon`.
//!
//! For a superposition of gaussian-enveloped plane waves every pair of
//! components `(m, n)` gives a term whose dependence on the mean frequency
//! `(xi + zeta) / 2` is gaussian and is integrated in closed form. The
//! remaining integral over the frequency difference `kappa = xi - zeta`
//! carries the coherence kernel and is computed by adaptive quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beam::BeamSpec;
use crate::covariance::{q_kernel_with, CovarianceModel, LineIntegral};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::regime::RegimeScaling;

use super::first::mean_field;

/// Arguments of `m_{1,1}(z, r, x, y)` in the rescaled frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub z: f64,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl MomentQuery {
    pub fn new(z: f64, r: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::Domain(format!("moment query needs z >= 0, got {z}")));
        }
        if r.len() != x.len() || r.len() != y.len() || r.is_empty() {
            return Err(Error::Config("r, x and y must have the same nonzero dimension".into()));
        }
        Ok(Self { z, r, x, y })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// The query with `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self { z: self.z, r: self.r.clone(), x: self.y.clone(), y: self.x.clone() }
    }

    /// Offset `y - x`.
    pub fn tau(&self) -> Vec<f64> {
        self.y.iter().zip(&self.x).map(|(a, b)| a - b).collect()
    }
}

/// Points of evaluation expressed on the envelope scale.
struct Points<'a> {
    /// `eps^beta X` and `eps^beta Y`.
    px: &'a [f64],
    py: &'a [f64],
    /// `Y - X` in physical units.
    tau: &'a [f64],
    /// `k_m . X - k_n . Y` for the requested pair.
    carrier: f64,
}

/// Coefficients of the complex exponent `cq k^2 + lin k + cst` on one axis.
struct Axis {
    cq: Complex64,
    lin: Complex64,
    cst: Complex64,
    center: f64,
    half_width: f64,
}

fn axis_coeffs(
    wm: f64,
    wn: f64,
    cm: f64,
    cn: f64,
    km: f64,
    kn: f64,
    px: f64,
    py: f64,
    az: f64,
    s: f64,
) -> (Axis, f64) {
    let i = Complex64::i();
    let alpha1 = Complex64::new(-wm * wm / 2.0, -az * s * s);
    let alpha2 = Complex64::new(-wn * wn / 2.0, az * s * s);
    let b1 = i * (-cm + px - 2.0 * az * s * km);
    let b2 = i * (cn - py + 2.0 * az * s * kn);
    let a_s = (wm * wm + wn * wn) / 2.0;
    let dd = alpha1 - alpha2;
    let cq = dd * dd / (4.0 * a_s) + (alpha1 + alpha2) / 4.0;
    let lin = dd * (b1 + b2) / (2.0 * a_s) + (b1 - b2) / 2.0;
    let cst = (b1 + b2) * (b1 + b2) / (4.0 * a_s);
    let c2 = cq.re;
    debug_assert!(c2 < 0.0);
    let center = -lin.re / (2.0 * c2);
    let half_width = 9.0 / (-c2).sqrt();
    let pref = wm * wn / (2.0 * PI) * (PI / a_s).sqrt();
    (Axis { cq, lin, cst, center, half_width }, pref)
}

impl Axis {
    fn exponent(&self, k: f64) -> Complex64 {
        self.cq * k * k + self.lin * k + self.cst
    }
}

fn pair_term(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    m: usize,
    n: usize,
    pts: &Points,
) -> Result<Complex64> {
    let d = beam.dim();
    let cm = &beam.components()[m];
    let cn = &beam.components()[n];
    let s = scaling.source_scale();
    let az = scaling.laplacian_coeff() * z;
    let mut axes = Vec::with_capacity(d);
    let mut pref = cm.amplitude * cn.amplitude;
    for i in 0..d {
        let (ax, p) = axis_coeffs(
            cm.width, cn.width, cm.center[i], cn.center[i], cm.kvec[i], cn.kvec[i], pts.px[i], pts.py[i], az, s,
        );
        pref *= p;
        axes.push(ax);
    }
    let km2: f64 = cm.kvec.iter().map(|k| k * k).sum();
    let kn2: f64 = cn.kvec.iter().map(|k| k * k).sum();
    let carrier = Complex64::cis(pts.carrier - az * (km2 - kn2));
    if pref == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let scale = scaling.eta() / scaling.epsilon();
    let dk: Vec<f64> = cm.kvec.iter().zip(&cn.kvec).map(|(a, b)| a - b).collect();
    let coherence = |kappa: &[f64]| -> Result<f64> {
        let alpha: Vec<f64> = (0..d).map(|i| scale * (dk[i] + s * kappa[i])).collect();
        q_kernel_with(model, pts.tau, &alpha, z, scaling, LineIntegral::Auto)
    };

    let peak: f64 = axes.iter().map(|a| a.exponent(a.center).re).sum::<f64>().exp();
    let volume: f64 = axes.iter().map(|a| 2.0 * a.half_width).product();
    let opts = QuadOptions::new(1e-13 * peak * volume, 1e-10);
    let mut failure = None;
    let value = match d {
        1 => {
            let a = &axes[0];
            integrate(
                |k: f64| match coherence(&[k]) {
                    Ok(q) => a.exponent(k).exp() * q,
                    Err(e) => {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                },
                a.center - a.half_width,
                a.center + a.half_width,
                opts,
            )?
            .value
        }
        _ => {
            let (a0, a1) = (&axes[0], &axes[1]);
            let inner_opts = QuadOptions::new(1e-13 * peak * 2.0 * a1.half_width, 1e-11);
            integrate(
                |k0: f64| {
                    let e0 = a0.exponent(k0).exp();
                    let inner = integrate(
                        |k1: f64| match coherence(&[k0, k1]) {
                            Ok(q) => a1.exponent(k1).exp() * q,
                            Err(e) => {
                                failure.get_or_insert(e);
                                Complex64::new(0.0, 0.0)
                            }
                        },
                        a1.center - a1.half_width,
                        a1.center + a1.half_width,
                        inner_opts,
                    );
                    match inner {
                        Ok(q) => e0 * q.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                            Complex64::new(0.0, 0.0)
                        }
                    }
                },
                a0.center - a0.half_width,
                a0.center + a0.half_width,
                opts,
            )
            .map_err(|e| Error::Numeric(format!("two-point function, pair ({m}, {n}): {e}")))?
            .value
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value * pref * carrier)
}

fn sum_terms(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    px: &[f64],
    py: &[f64],
    tau: &[f64],
    carrier: impl Fn(usize, usize) -> f64,
) -> Result<Complex64> {
    let nc = beam.components().len();
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..nc {
        for n in 0..nc {
            let pts = Points { px, py, tau, carrier: carrier(m, n) };
            total += pair_term(beam, scaling, model, z, m, n, &pts)?;
        }
    }
    Ok(total)
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

/// `m_{1,1}(z, r, x, y) = E[u(eps^-beta r + eta x) u*(eps^-beta r + eta y)]`,
/// exact in `epsilon`.
pub fn second_moment(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
) -> Result<Complex64> {
    check_dims(beam, model, q.dim())?;
    let s = scaling.source_scale();
    let eta = scaling.eta();
    let px: Vec<f64> = q.r.iter().zip(&q.x).map(|(r, x)| r + s * eta * x).collect();
    let py: Vec<f64> = q.r.iter().zip(&q.y).map(|(r, y)| r + s * eta * y).collect();
    let tau: Vec<f64> = q.tau().iter().map(|t| eta * t).collect();
    let comps = beam.components();
    sum_terms(beam, scaling, model, q.z, &px, &py, &tau, |m, n| {
        let (km, kn) = (&comps[m].kvec, &comps[n].kvec);
        (0..q.dim())
            .map(|i| (km[i] - kn[i]) * q.r[i] / s + eta * (km[i] * q.x[i] - kn[i] * q.y[i]))
            .sum()
    })
}

/// `E[u(z, X) u*(z, Y)]` at physical points.
pub fn second_moment_physical(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    x: &[f64],
    y: &[f64],
) -> Result<Complex64> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::Domain(format!("moment query needs z >= 0, got {z}")));
    }
    if x.len() != y.len() {
        return Err(Error::Config("X and Y must have the same dimension".into()));
    }
    check_dims(beam, model, x.len())?;
    let s = scaling.source_scale();
    let px: Vec<f64> = x.iter().map(|v| s * v).collect();
    let py: Vec<f64> = y.iter().map(|v| s * v).collect();
    let tau: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let comps = beam.components();
    sum_terms(beam, scaling, model, z, &px, &py, &tau, |m, n| {
        let (km, kn) = (&comps[m].kvec, &comps[n].kvec);
        (0..x.len()).map(|i| km[i] * x[i] - kn[i] * y[i]).sum()
    })
}

/// `m_{1,1} - m_{1,0}(x) m_{1,0}(y)^*`, the covariance of the field.
pub fn centered_second_moment(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    q: &MomentQuery,
) -> Result<Complex64> {
    let m11 = second_moment(beam, scaling, model, q)?;
    let mx = mean_field(beam, scaling, model, q.z, &q.r, &q.x);
    let my = mean_field(beam, scaling, model, q.z, &q.r, &q.y);
    Ok(m11 - mx * my.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamComponent;

    fn two_beams() -> BeamSpec {
        BeamSpec::new(
            vec![
                BeamComponent { amplitude: 1.0, width: 1.0, center: vec![0.3], kvec: vec![0.0] },
                BeamComponent { amplitude: 0.6, width: 1.4, center: vec![-0.5], kvec: vec![1.5] },
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn initial_value_is_product_of_beam_values() {
        let beam = two_beams();
        let s = RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap();
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let q = MomentQuery::new(0.0, vec![0.2], vec![0.7], vec![-1.1]).unwrap();
        let v = second_moment(&beam, &s, &m, &q).unwrap();
        let ux = beam.value_rescaled(&s, &q.r, &q.x);
        let uy = beam.value_rescaled(&s, &q.r, &q.y);
        assert!((v - ux * uy.conj()).norm() < 1e-10, "{v} vs {}", ux * uy.conj());
    }

    #[test]
    fn factorizes_without_medium() {
        let beam = two_beams();
        let s = RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap();
        let zero = CovarianceModel::zero(1).unwrap();
        let q = MomentQuery::new(1.3, vec![0.1], vec![0.4], vec![-0.9]).unwrap();
        let v = second_moment(&beam, &s, &zero, &q).unwrap();
        let mx = mean_field(&beam, &s, &zero, q.z, &q.r, &q.x);
        let my = mean_field(&beam, &s, &zero, q.z, &q.r, &q.y);
        assert!((v - mx * my.conj()).norm() < 1e-10);
    }

    #[test]
    fn hermitian_in_x_and_y() {
        let beam = two_beams();
        let s = RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap();
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let q = MomentQuery::new(1.0, vec![0.0], vec![0.5], vec![-0.25]).unwrap();
        let a = second_moment(&beam, &s, &m, &q).unwrap();
        let b = second_moment(&beam, &s, &m, &q.swapped()).unwrap();
        assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn intensity_is_damped_only_through_coherence() {
        let beam = BeamSpec::gaussian(1.0, 1.0, 1).unwrap();
        let s = RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap();
        let m = CovarianceModel::gaussian(1.0, 1.0, 1).unwrap();
        let zero = CovarianceModel::zero(1).unwrap();
        let q = MomentQuery::new(1.0, vec![0.0], vec![0.0], vec![0.0]).unwrap();
        let with = second_moment(&beam, &s, &m, &q).unwrap();
        let without = second_moment(&beam, &s, &zero, &q).unwrap();
        assert!(with.im.abs() < 1e-12);
        assert!(with.re > 0.0);
        assert!((with.re - without.re).abs() < 0.5 * without.re);
        let centered = centered_second_moment(&beam, &s, &m, &q).unwrap();
        assert!(centered.re > 0.0 && centered.re < with.re);
    }

    #[test]
    fn physical_frame_agrees_with_rescaled_frame() {
        let beam = two_beams();
        let s = RegimeScaling::kinetic(0.25, 1.0, 2.0).unwrap();
        let m = CovarianceModel::gaussian(1.0, 0.8, 1).unwrap();
        let q = MomentQuery::new(0.7, vec![0.4], vec![0.3], vec![1.2]).unwrap();
        let a = second_moment(&beam, &s, &m, &q).unwrap();
        let xp = [q.r[0] / 0.25 + q.x[0]];
        let yp = [q.r[0] / 0.25 + q.y[0]];
        let b = second_moment_physical(&beam, &s, &m, q.z, &xp, &yp).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn two_dimensional_initial_value() {
        let beam = BeamSpec::new(
            vec![BeamComponent { amplitude: 1.0, width: 1.2, center: vec![0.1, -0.2], kvec: vec![0.5, 0.0] }],
            2,
        )
        .unwrap();
        let s = RegimeScaling::kinetic(0.5, 1.0, 1.0).unwrap();
        let m = CovarianceModel::gaussian(1.0, 1.0, 2).unwrap();
        let q = MomentQuery::new(0.0, vec![0.0, 0.3], vec![0.2, 0.0], vec![-0.4, 0.5]).unwrap();
        let v = second_moment(&beam, &s, &m, &q).unwrap();
        let ux = beam.value_rescaled(&s, &q.r, &q.x);
        let uy = beam.value_rescaled(&s, &q.r, &q.y);
        assert!((v - ux * uy.conj()).norm() < 1e-9);
        let zero = CovarianceModel::zero(2).unwrap();
        let q1 = MomentQuery::new(0.6, q.r.clone(), q.x.clone(), q.y.clone()).unwrap();
        let v1 = second_moment(&beam, &s, &zero, &q1).unwrap();
        let mx = mean_field(&beam, &s, &zero, q1.z, &q1.r, &q1.x);
        let my = mean_field(&beam, &s, &zero, q1.z, &q1.r, &q1.y);
        assert!((v1 - mx * my.conj()).norm() < 1e-9);
    }
}

//! The mean field: damped free-space propagation of the incident beam.

use num_complex::Complex64;

use crate::beam::BeamSpec;
use crate::covariance::CovarianceModel;
use crate::regime::RegimeScaling;

/// Free-space propagated component `m` at the point whose envelope-scale
/// coordinate is `p = eps^beta X` and whose carrier phase is `k_m . X`.
///
/// Each axis contributes `(1 + i t)^{-1/2} exp(-((p - c - 2 a z eps^beta k) / w)^2 / (2 (1 + i t)))`
/// with `t = 2 a z eps^{2 beta} / w^2`, and the carrier adds `exp(i k.X - i a z |k|^2)`.
pub(crate) fn free_component(
    beam: &BeamSpec,
    m: usize,
    scaling: &RegimeScaling,
    z: f64,
    p: &[f64],
    carrier_phase: f64,
) -> Complex64 {
    let c = &beam.components()[m];
    let a = scaling.laplacian_coeff();
    let s = scaling.source_scale();
    let t = Complex64::new(1.0, 2.0 * a * z * s * s / (c.width * c.width));
    let mut val = Complex64::new(c.amplitude, 0.0);
    let mut k2 = 0.0;
    for i in 0..p.len() {
        let u = (p[i] - c.center[i] - 2.0 * a * z * s * c.kvec[i]) / c.width;
        val *= (-(u * u) / (2.0 * t)).exp() / t.sqrt();
        k2 += c.kvec[i] * c.kvec[i];
    }
    val * Complex64::cis(carrier_phase - a * z * k2)
}

fn damping(scaling: &RegimeScaling, model: &CovarianceModel, z: f64) -> f64 {
    (-scaling.damping_rate(model.variance()) * z).exp()
}

/// `m_{1,0}(z, r, x)`: the mean field at the physical point
/// `eps^-beta r + eta x`, exact for every `eps`.
pub fn mean_field(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    r: &[f64],
    x: &[f64],
) -> Complex64 {
    let s = scaling.source_scale();
    let eta = scaling.eta();
    let p: Vec<f64> = r.iter().zip(x).map(|(ri, xi)| ri + s * eta * xi).collect();
    let free: Complex64 = (0..beam.components().len())
        .map(|m| {
            let k = &beam.components()[m].kvec;
            let phase: f64 = k.iter().zip(r.iter().zip(x)).map(|(k, (ri, xi))| k * (ri / s + eta * xi)).sum();
            free_component(beam, m, scaling, z, &p, phase)
        })
        .sum();
    free * damping(scaling, model, z)
}

/// The mean field at a physical point `X` (raw simulation coordinates).
pub fn mean_field_physical(
    beam: &BeamSpec,
    scaling: &RegimeScaling,
    model: &CovarianceModel,
    z: f64,
    x: &[f64],
) -> Complex64 {
    let s = scaling.source_scale();
    let p: Vec<f64> = x.iter().map(|v| s * v).collect();
    let free: Complex64 = (0..beam.components().len())
        .map(|m| {
            let phase: f64 = beam.components()[m].kvec.iter().zip(x).map(|(k, v)| k * v).sum();
            free_component(beam, m, scaling, z, &p, phase)
        })
        .sum();
    free * damping(scaling, model, z)
}

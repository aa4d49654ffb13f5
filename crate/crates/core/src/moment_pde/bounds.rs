//! Numerical checks of the oscillatory-integral bounds used to control the
//! remainder of the gaussian approximation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, QuadOptions};

/// One row of a bound table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub delta: f64,
    /// Integral at `w = 0`.
    pub at_zero: f64,
    /// Largest integral over the sampled `w`.
    pub sup: f64,
    /// The `|w|` attaining `sup`.
    pub argsup: f64,
    /// Reference scale: `delta |ln delta|^2` or `delta |ln delta|` for the
    /// linear check, `sqrt(delta)` or `delta |ln delta|` for the quadratic one.
    pub reference: f64,
    /// `sup / reference`.
    pub ratio: f64,
    /// Explicit bound `2 pi |f|_inf sqrt(delta)` where one is known.
    pub explicit_bound: Option<f64>,
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-15, rel_tol: 1e-9, max_intervals: 4000 }
}

fn cutoff(model: &CovarianceModel) -> f64 {
    let k = model.max_wavenumber();
    if k.is_finite() {
        return k;
    }
    match model.gaussian_params() {
        Some((_, ell)) => 9.0 / ell,
        None => 50.0,
    }
}

fn check_deltas(model: &CovarianceModel, deltas: &[f64]) -> Result<()> {
    if !(1..=2).contains(&model.dim()) {
        return Err(Error::Unsupported(format!("bound checks run in d = 1 or 2, model has d = {}", model.dim())));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::Config(format!("delta = {d} must lie in (0, 1)")));
    }
    Ok(())
}

/// Sampled `|w|`: a lattice on `[0, 4/ell]` plus candidates on the `sqrt(delta)` scale.
fn w_sample(k: f64, delta: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..=32).map(|j| j as f64 * k / 72.0).collect();
    w.extend([0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0].iter().map(|s| s * delta.sqrt()));
    w.sort_by(f64::total_cmp);
    w.dedup();
    w
}

fn sorted_breaks(lo: f64, hi: f64, inner: &[f64]) -> Vec<f64> {
    let mut b = vec![lo, hi];
    b.extend(inner.iter().copied().filter(|x| x.is_finite() && *x > lo && *x < hi));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn angular_min(a: f64) -> f64 {
    if a >= 1.0 {
        2.0 * PI
    } else {
        4.0 * (a.asin() + a * ((1.0 + (1.0 - a * a).sqrt()) / a).ln())
    }
}

/// `int f(xi) (1 min delta / (|xi| c)) dxi` in dimension `d` for a radial `f`.
fn inner_linear(model: &CovarianceModel, k: f64, delta: f64, c: f64) -> Result<f64> {
    let f = |r: f64| model.spectrum_radial(r);
    let brk = if c > 0.0 { delta / c } else { f64::INFINITY };
    let b = sorted_breaks(0.0, k, &[brk]);
    let v = if model.dim() == 1 {
        2.0 * integrate_breaks(|r| f(r) * if r * c <= delta { 1.0 } else { delta / (r * c) }, &b, opts())?.value
    } else {
        integrate_breaks(
            |r| {
                let a = if r * c > 0.0 { delta / (r * c) } else { f64::INFINITY };
                f(r) * r * angular_min(a)
            },
            &b,
            opts(),
        )?
        .value
    };
    Ok(v)
}

fn linear_integral(model: &CovarianceModel, k: f64, delta: f64, w: f64) -> Result<f64> {
    let g = |r: f64| model.spectrum_radial(r);
    if model.dim() == 1 {
        let b = sorted_breaks(-k, k, &[-w]);
        let mut err = None;
        let v = integrate_breaks(
            |zeta| match inner_linear(model, k, delta, (zeta + w).abs()) {
                Ok(x) => g(zeta.abs()) * x,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            &b,
            opts(),
        )?
        .value;
        err.map_or(Ok(v), Err)
    } else {
        let b = sorted_breaks(0.0, k + w, &[w, k - w]);
        let mut err = None;
        let v = integrate_breaks(
            |s| {
                if s == 0.0 {
                    return 0.0;
                }
                let ring = integrate_breaks(
                    |phi| g((w * w + s * s - 2.0 * w * s * phi.cos()).max(0.0).sqrt()),
                    &[0.0, PI],
                    opts(),
                );
                match (ring, inner_linear(model, k, delta, s)) {
                    (Ok(r), Ok(x)) => 2.0 * r.value * s * x,
                    (Err(e), _) | (_, Err(e)) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            &b,
            opts(),
        )?
        .value;
        err.map_or(Ok(v), Err)
    }
}

fn quadratic_integral(model: &CovarianceModel, k: f64, delta: f64, w: f64) -> Result<f64> {
    let f = |r: f64| model.spectrum_radial(r);
    let kernel = |x: f64| {
        let gap = (x * x - w * w).abs();
        if gap <= delta {
            1.0
        } else {
            delta / gap
        }
    };
    let mut cands = vec![w, (w * w + delta).sqrt()];
    if w * w > delta {
        cands.push((w * w - delta).sqrt());
    }
    if model.dim() == 1 {
        let mut inner: Vec<f64> = cands.iter().flat_map(|&c| [c, -c]).collect();
        inner.push(0.0);
        let b = sorted_breaks(-w - k, -w + k, &inner);
        Ok(integrate_breaks(|xi| f((xi + w).abs()) * kernel(xi), &b, opts())?.value)
    } else {
        cands.push(k - w);
        let b = sorted_breaks(0.0, k + w, &cands);
        let mut err = None;
        let v = integrate_breaks(
            |r| {
                match integrate_breaks(
                    |phi| f((r * r + w * w + 2.0 * r * w * phi.cos()).max(0.0).sqrt()),
                    &[0.0, PI],
                    opts(),
                ) {
                    Ok(ring) => 2.0 * ring.value * r * kernel(r),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            &b,
            opts(),
        )?
        .value;
        err.map_or(Ok(v), Err)
    }
}

fn sweep<F>(model: &CovarianceModel, deltas: &[f64], reference: impl Fn(f64) -> f64, explicit: impl Fn(f64) -> Option<f64>, mut integral: F) -> Result<Vec<BoundRow>>
where
    F: FnMut(f64, f64, f64) -> Result<f64>,
{
    check_deltas(model, deltas)?;
    let k = cutoff(model);
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut sup = f64::NEG_INFINITY;
        let mut argsup = 0.0;
        let mut at_zero = 0.0;
        for w in w_sample(k, delta) {
            let v = integral(k, delta, w)?;
            if w == 0.0 {
                at_zero = v;
            }
            if v > sup {
                sup = v;
                argsup = w;
            }
        }
        let reference = reference(delta);
        rows.push(BoundRow { delta, at_zero, sup, argsup, reference, ratio: sup / reference, explicit_bound: explicit(delta) });
    }
    Ok(rows)
}

/// Supremum over sampled `w` of
/// `int int f(xi) g(zeta) (1 min delta / |xi . (zeta + w)|) dxi dzeta`
/// with `f = g = R^`, compared with `delta |ln delta|^2` (d = 1) or
/// `delta |ln delta|` (d = 2).
pub fn bound_check_linear(model: &CovarianceModel, deltas: &[f64]) -> Result<Vec<BoundRow>> {
    let d = model.dim();
    sweep(
        model,
        deltas,
        |delta| if d == 1 { delta * delta.ln().powi(2) } else { delta * delta.ln().abs() },
        |_| None,
        |k, delta, w| linear_integral(model, k, delta, w),
    )
}

/// Supremum over sampled `w` of `int f(xi + w) min{1, delta / ||xi|^2 - |w|^2|} dxi`
/// with `f = R^`, compared with `sqrt(delta)` (d = 1) or `delta |ln delta|`
/// (d = 2). In d = 1 the explicit bound `2 pi |f|_inf sqrt(delta)` is reported.
pub fn bound_check_quadratic(model: &CovarianceModel, deltas: &[f64]) -> Result<Vec<BoundRow>> {
    let d = model.dim();
    let k = cutoff(model);
    let f_max = (0..=2000).map(|i| model.spectrum_radial(k * i as f64 / 2000.0)).fold(0.0, f64::max);
    sweep(
        model,
        deltas,
        |delta| if d == 1 { delta.sqrt() } else { delta * delta.ln().abs() },
        |delta| (d == 1).then(|| 2.0 * PI * f_max * delta.sqrt()),
        |k, delta, w| quadratic_integral(model, k, delta, w),
    )
}

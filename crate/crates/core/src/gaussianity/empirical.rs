//! Empirical mixed moments, their centered versions, and the distance of
//! an ensemble from the gaussian moment rule.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{ComplexEstimate, EnsembleStats, MomentTuple, MAX_MOMENT_ORDER};
use crate::stats::ComplexSum;

use super::functional::{centered_functional, gaussian_functional};

/// Delete-one jackknife for a complex statistic of per-sample feature means.
///
/// `features` maps one sample to a fixed-length feature vector; `stat`
/// maps the vector of feature means to the statistic. Returns the
/// full-sample value with jackknife standard errors of both components.
pub fn jackknife_complex<S, F, T>(samples: &[S], features: F, mut stat: T) -> ComplexEstimate
where
    F: Fn(&S) -> Vec<Complex64>,
    T: FnMut(&[Complex64]) -> Complex64,
{
    let n = samples.len();
    let Some(first) = samples.first() else {
        return ComplexEstimate { value: Complex64::new(f64::NAN, f64::NAN), se_re: f64::NAN, se_im: f64::NAN };
    };
    let k = features(first).len();
    let mut sums = vec![ComplexSum::new(); k];
    for s in samples {
        for (acc, v) in sums.iter_mut().zip(features(s)) {
            acc.add(v);
        }
    }
    let total: Vec<Complex64> = sums.iter().map(ComplexSum::value).collect();
    let full = stat(&total.iter().map(|v| v / n as f64).collect::<Vec<_>>());
    if n < 2 {
        return ComplexEstimate { value: full, se_re: f64::NAN, se_im: f64::NAN };
    }
    let mut loo = vec![Complex64::new(0.0, 0.0); k];
    let mut vals = Vec::with_capacity(n);
    for s in samples {
        for ((l, t), v) in loo.iter_mut().zip(&total).zip(features(s)) {
            *l = (t - v) / (n - 1) as f64;
        }
        vals.push(stat(&loo));
    }
    let mean = vals.iter().sum::<Complex64>() / n as f64;
    let f = (n as f64 - 1.0) / n as f64;
    let var_re: f64 = vals.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() * f;
    let var_im: f64 = vals.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() * f;
    ComplexEstimate { value: full, se_re: var_re.sqrt(), se_im: var_im.sqrt() }
}

/// The `p + q` factors `u(x_1) .. u(x_p), u*(y_1) .. u*(y_q)` of a tuple.
fn factors(t: &MomentTuple, s: &[Complex64]) -> Vec<Complex64> {
    t.xs.iter().map(|&i| s[i]).chain(t.ys.iter().map(|&i| s[i].conj())).collect()
}

/// Products of every subset of `f`, indexed by bit mask.
fn subset_products(f: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0); 1 << f.len()];
    for mask in 1usize..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] * f[low];
    }
    out
}

/// `E[prod_k (f_k - E f_k)]` from the means of all subset products.
fn centered_from_subsets(means: &[Complex64], order: usize) -> Complex64 {
    let full = (1usize << order) - 1;
    let single: Vec<Complex64> = (0..order).map(|k| means[1 << k]).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for mask in 0..=full {
        let mut term = means[mask];
        for (k, m) in single.iter().enumerate() {
            if mask >> k & 1 == 0 {
                term *= -m;
            }
        }
        total += term;
    }
    total
}

/// Empirical moments `E[prod u(x_j) prod u*(y_l)]` for a list of probe
/// tuples of a common order `(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTensor {
    pub p: usize,
    pub q: usize,
    pub tuples: Vec<MomentTuple>,
    pub raw: Vec<ComplexEstimate>,
    /// Moments of the field minus its sample mean.
    pub centered: Vec<ComplexEstimate>,
}

impl MomentTensor {
    /// The tensor of order `(q, p)` with the roles of the probes exchanged.
    pub fn conjugate(&self) -> Self {
        let conj = |e: &ComplexEstimate| ComplexEstimate { value: e.value.conj(), ..*e };
        Self {
            p: self.q,
            q: self.p,
            tuples: self.tuples.iter().map(|t| MomentTuple::new(t.ys.clone(), t.xs.clone())).collect(),
            raw: self.raw.iter().map(conj).collect(),
            centered: self.centered.iter().map(conj).collect(),
        }
    }
}

fn check_tuples(stats: &EnsembleStats, p: usize, q: usize, tuples: &[MomentTuple]) -> Result<()> {
    if p + q > MAX_MOMENT_ORDER {
        return Err(Error::Size(format!("moments of order p + q = {} exceed {MAX_MOMENT_ORDER}", p + q)));
    }
    if stats.samples.len() < 2 {
        return Err(Error::Config(format!(
            "moment estimation needs at least two stored realizations, found {}",
            stats.samples.len()
        )));
    }
    let np = stats.probes.len();
    for t in tuples {
        if t.order() != (p, q) {
            return Err(Error::Config(format!("tuple {t:?} is not of order ({p}, {q})")));
        }
        if let Some(i) = t.xs.iter().chain(&t.ys).find(|&&i| i >= np) {
            return Err(Error::Config(format!("tuple {t:?} refers to probe {i}, but only {np} probes are stored")));
        }
    }
    Ok(())
}

/// Estimate raw and centered moments of order `(p, q)` at the given probe
/// tuples, with jackknife standard errors over realizations.
pub fn empirical_moments(stats: &EnsembleStats, p: usize, q: usize, tuples: &[MomentTuple]) -> Result<MomentTensor> {
    check_tuples(stats, p, q, tuples)?;
    let order = p + q;
    let mut raw = Vec::with_capacity(tuples.len());
    let mut centered = Vec::with_capacity(tuples.len());
    for t in tuples {
        raw.push(stats.moment_of(|s| t.product(s)));
        centered.push(jackknife_complex(
            &stats.samples,
            |s| subset_products(&factors(t, s)),
            |m| centered_from_subsets(m, order),
        ));
    }
    Ok(MomentTensor { p, q, tuples: tuples.to_vec(), raw, centered })
}

/// Which gaussian moment rule the empirical moment is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapMode {
    /// Raw moment against `F` of the empirical first and second moments.
    Full,
    /// Centered moment against `F~` of the centered second moments.
    Centered,
    /// Raw moment against `F~` of the raw second moments.
    Circular,
}

/// Relative distance between an empirical moment and the gaussian rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    /// `|m - F| / scale`.
    pub gap: f64,
    /// Jackknife standard error of `|m - F| / scale`, propagated from the
    /// complex difference.
    pub se: f64,
    /// `m - F` with its standard errors.
    pub difference: ComplexEstimate,
    pub scale: f64,
}

impl GapEstimate {
    /// Whether the gap is within `k` standard errors of zero.
    pub fn within(&self, k: f64) -> bool {
        let d = self.difference;
        d.value.re.abs() <= k * d.se_re.max(f64::MIN_POSITIVE) && d.value.im.abs() <= k * d.se_im.max(f64::MIN_POSITIVE)
    }
}

/// Feature layout for one tuple: subset products of the `p + q` factors,
/// then `|u|^2` at each factor's probe.
fn gap_features(t: &MomentTuple, s: &[Complex64]) -> Vec<Complex64> {
    let f = factors(t, s);
    let mut out = subset_products(&f);
    out.extend(f.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)));
    out
}

fn gap_stat(m: &[Complex64], p: usize, q: usize, mode: GapMode) -> Result<(Complex64, f64)> {
    let order = p + q;
    let subsets = 1usize << order;
    let mean = |k: usize| m[1 << k];
    let pair = |j: usize, l: usize| m[(1 << j) | (1 << (p + l))];
    let raw = m[subsets - 1];
    let g_raw: Vec<Complex64> = (0..p).flat_map(|j| (0..q).map(move |l| (j, l))).map(|(j, l)| pair(j, l)).collect();
    let (emp, model, scale) = match mode {
        GapMode::Full => {
            let h: Vec<Complex64> = (0..p).map(mean).collect();
            let hp: Vec<Complex64> = (p..order).map(mean).collect();
            let scale: f64 = (0..order).map(|k| m[subsets + k].re.sqrt()).product();
            (raw, gaussian_functional(&h, &hp, &g_raw)?, scale)
        }
        GapMode::Circular => {
            let scale: f64 = (0..order).map(|k| m[subsets + k].re.sqrt()).product();
            (raw, centered_functional(&g_raw, p, q)?, scale)
        }
        GapMode::Centered => {
            let g: Vec<Complex64> = (0..p)
                .flat_map(|j| (0..q).map(move |l| (j, l)))
                .map(|(j, l)| pair(j, l) - mean(j) * mean(p + l))
                .collect();
            let scale: f64 = (0..order).map(|k| (m[subsets + k].re - mean(k).norm_sqr()).max(0.0).sqrt()).product();
            (centered_from_subsets(&m[..subsets], order), centered_functional(&g, p, q)?, scale)
        }
    };
    Ok((emp - model, scale))
}

/// Compare empirical moments of order `(p, q)` with the gaussian moment
/// rule at every tuple.
pub fn gaussianity_gap(
    stats: &EnsembleStats,
    p: usize,
    q: usize,
    tuples: &[MomentTuple],
    mode: GapMode,
) -> Result<Vec<GapEstimate>> {
    check_tuples(stats, p, q, tuples)?;
    let mut out = Vec::with_capacity(tuples.len());
    for t in tuples {
        let n = stats.samples.len() as f64;
        let means: Vec<Complex64> = {
            let mut sums = vec![ComplexSum::new(); (1 << (p + q)) + p + q];
            for s in &stats.samples {
                for (acc, v) in sums.iter_mut().zip(gap_features(t, s)) {
                    acc.add(v);
                }
            }
            sums.iter().map(|s| s.value() / n).collect()
        };
        let (_, scale) = gap_stat(&means, p, q, mode)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Diagnostic(format!(
                "gaussianity gap for tuple {t:?} has degenerate scale {scale}: a second moment vanishes"
            )));
        }
        let mut failure = None;
        let difference = jackknife_complex(
            &stats.samples,
            |s| gap_features(t, s),
            |m| match gap_stat(m, p, q, mode) {
                Ok((d, _)) => d,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let gap = difference.value.norm() / scale;
        let se = if difference.value.norm() > 0.0 {
            (difference.value.re.powi(2) * difference.se_re.powi(2) + difference.value.im.powi(2) * difference.se_im.powi(2))
                .sqrt()
                / difference.value.norm()
                / scale
        } else {
            difference.se() / scale
        };
        out.push(GapEstimate { gap, se, difference, scale });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussianity::fixtures::{deterministic_stats, synthetic_gaussian_stats};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn covariance() -> Vec<Complex64> {
        vec![c(1.0, 0.0), c(0.4, 0.3), c(0.4, -0.3), c(0.8, 0.0)]
    }

    #[test]
    fn deterministic_moments_are_products() {
        let vals = vec![c(1.0, 2.0), c(-0.5, 0.3)];
        let stats = deterministic_stats(&vals, 10).unwrap();
        let t = MomentTuple::new(vec![0, 1], vec![1, 0]);
        let m = empirical_moments(&stats, 2, 2, &[t.clone()]).unwrap();
        assert!((m.raw[0].value - t.product(&vals)).norm() < 1e-14);
        assert!(m.centered[0].value.norm() < 1e-14);
        let t11 = MomentTuple::new(vec![0], vec![0]);
        let m11 = empirical_moments(&stats, 1, 1, &[t11]).unwrap();
        assert!((m11.raw[0].value.re - vals[0].norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn conjugate_tensor() {
        let stats = synthetic_gaussian_stats(&covariance(), &[c(0.0, 0.0); 2], 500, 3).unwrap();
        let t = MomentTuple::new(vec![0, 1], vec![1]);
        let m = empirical_moments(&stats, 2, 1, &[t]).unwrap();
        let mc = m.conjugate();
        let tc = &mc.tuples[0];
        let direct = empirical_moments(&stats, 1, 2, &[tc.clone()]).unwrap();
        assert!((direct.raw[0].value - mc.raw[0].value).norm() < 1e-12);
    }

    #[test]
    fn centered_subset_expansion_matches_direct_formula() {
        let stats = synthetic_gaussian_stats(&covariance(), &[c(0.5, -0.2), c(0.1, 0.3)], 200, 9).unwrap();
        let t = MomentTuple::new(vec![0, 1], vec![0, 1]);
        let m = empirical_moments(&stats, 2, 2, &[t.clone()]).unwrap();
        let mean0 = stats.mean(0).value;
        let mean1 = stats.mean(1).value;
        let direct: Complex64 = stats
            .samples
            .iter()
            .map(|s| {
                let a = s[0] - mean0;
                let b = s[1] - mean1;
                a * b * a.conj() * b.conj()
            })
            .sum::<Complex64>()
            / stats.samples.len() as f64;
        assert!((m.centered[0].value - direct).norm() < 1e-12);
    }

    #[test]
    fn fourth_moment_of_synthetic_gaussian() {
        let cov = covariance();
        let stats = synthetic_gaussian_stats(&cov, &[c(0.0, 0.0); 2], 100_000, 11).unwrap();
        let t = MomentTuple::new(vec![0, 1], vec![0, 1]);
        let m = empirical_moments(&stats, 2, 2, &[t]).unwrap();
        let g = [cov[0], cov[1], cov[2], cov[3]];
        let expect = centered_functional(&g, 2, 2).unwrap();
        assert!(m.raw[0].agrees_with(expect, 4.0), "{:?} vs {expect}", m.raw[0]);
    }

    #[test]
    fn gap_separates_gaussian_from_deterministic() {
        let stats = synthetic_gaussian_stats(&covariance(), &[c(0.3, 0.1), c(0.0, -0.2)], 20_000, 5).unwrap();
        let tuples = [MomentTuple::new(vec![0, 1], vec![0, 1]), MomentTuple::new(vec![0, 0], vec![1, 1])];
        for mode in [GapMode::Full, GapMode::Centered] {
            for g in gaussianity_gap(&stats, 2, 2, &tuples, mode).unwrap() {
                assert!(g.within(4.0), "{mode:?}: {g:?}");
                assert!(g.gap < 0.05);
            }
        }
        let det = deterministic_stats(&[c(1.0, 0.5), c(-0.4, 0.2)], 50).unwrap();
        let r = gaussianity_gap(&det, 2, 2, &tuples, GapMode::Circular).unwrap();
        assert!(r.iter().all(|g| g.gap > 0.5));
        let r = gaussianity_gap(&det, 2, 2, &tuples, GapMode::Centered);
        assert!(matches!(r, Err(Error::Diagnostic(_))));
    }

    #[test]
    fn missing_probe_is_rejected() {
        let stats = deterministic_stats(&[c(1.0, 0.0)], 4).unwrap();
        let t = MomentTuple::new(vec![0], vec![3]);
        assert!(matches!(empirical_moments(&stats, 1, 1, &[t]), Err(Error::Config(_))));
    }
}

//! Speckle statistics: scintillation index, exponential intensity law and
//! self-averaging of box-averaged intensity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{EnsembleStats, RealEstimate};
use crate::stats::{mean, KahanSum};

/// Smallest sample count accepted by [`exponential_law_test`].
pub const MIN_EXPONENTIAL_SAMPLES: usize = 1000;

/// Asymptotic Kolmogorov-Smirnov critical values `c_alpha`; the test
/// rejects when `sqrt(n) D > c_alpha`.
pub const KS_CRITICAL: [(f64, f64); 3] = [(0.10, 1.224), (0.05, 1.358), (0.01, 1.628)];

fn ks_coefficient(alpha: f64) -> Result<f64> {
    KS_CRITICAL
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|(_, c)| *c)
        .ok_or_else(|| Error::Config(format!("no tabulated KS critical value for alpha = {alpha}")))
}

/// Sample covariance of two equally long series, divided by `n`, i.e. the
/// covariance of their sample means.
fn mean_covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let mut s = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add((x - ma) * (y - mb));
    }
    s.value() / (n - 1.0) / n
}

/// `(E[I^2] - E[I]^2) / E[I]^2` of intensity samples with a delta-method
/// standard error.
pub fn scintillation_from_samples(intensity: &[f64]) -> Result<RealEstimate> {
    if intensity.len() < 2 {
        return Err(Error::Diagnostic("scintillation index needs at least two samples".into()));
    }
    let m1 = mean(intensity);
    if !(m1 > 0.0) {
        return Err(Error::Diagnostic(format!("mean intensity {m1} is not positive")));
    }
    let var: f64 = intensity.iter().map(|i| (i - m1) * (i - m1)).sum::<f64>() / intensity.len() as f64;
    let value = var / (m1 * m1);
    let sq: Vec<f64> = intensity.iter().map(|i| i * i).collect();
    let m2 = mean(&sq);
    let (ga, gb) = (-2.0 * m2 / m1.powi(3), 1.0 / (m1 * m1));
    let v = ga * ga * mean_covariance(intensity, intensity)
        + 2.0 * ga * gb * mean_covariance(intensity, &sq)
        + gb * gb * mean_covariance(&sq, &sq);
    Ok(RealEstimate { value, se: v.max(0.0).sqrt() })
}

/// Scintillation index at each requested probe.
pub fn scintillation_index(stats: &EnsembleStats, probes: &[usize]) -> Result<Vec<RealEstimate>> {
    probes
        .iter()
        .map(|&i| {
            if i >= stats.probes.len() {
                return Err(Error::Config(format!("probe {i} is not stored")));
            }
            scintillation_from_samples(&stats.intensity_samples(i))
        })
        .collect()
}

/// `E[I^p] / (p! E[I]^p)` with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRatio {
    pub p: u32,
    pub value: f64,
    pub se: f64,
}

impl MomentRatio {
    pub fn within(&self, k: f64) -> bool {
        (self.value - 1.0).abs() <= k * self.se
    }
}

/// Outcome of [`exponential_law_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialReport {
    pub samples: usize,
    pub mean: f64,
    pub ratios: Vec<MomentRatio>,
    /// Kolmogorov-Smirnov distance to the exponential law with the sample
    /// mean.
    pub ks_statistic: f64,
    /// Critical distance `c_0.05 / sqrt(n)`.
    pub ks_critical: f64,
    pub ks_pass: bool,
    pub note: String,
}

impl ExponentialReport {
    /// Whether every moment ratio in `orders` lies within `k` standard
    /// errors of one.
    pub fn ratios_pass(&self, orders: &[u32], k: f64) -> bool {
        self.ratios.iter().filter(|r| orders.contains(&r.p)).all(|r| r.within(k))
    }
}

/// Test intensity samples against the exponential law through moment
/// ratios for `p = 2, 3, 4` and a Kolmogorov-Smirnov test at 5%.
pub fn exponential_law_test(intensity: &[f64]) -> Result<ExponentialReport> {
    let n = intensity.len();
    if n < MIN_EXPONENTIAL_SAMPLES {
        return Err(Error::Size(format!("exponential law test needs >= {MIN_EXPONENTIAL_SAMPLES} samples, got {n}")));
    }
    let m1 = mean(intensity);
    if !(m1 > 0.0) {
        return Err(Error::Diagnostic(format!("mean intensity {m1} is not positive")));
    }
    let mut ratios = Vec::new();
    for p in 2u32..=4 {
        let pw: Vec<f64> = intensity.iter().map(|i| i.powi(p as i32)).collect();
        let mp = mean(&pw);
        let fact: f64 = (1..=p).map(f64::from).product();
        let value = mp / (fact * m1.powi(p as i32));
        let gb = 1.0 / (fact * m1.powi(p as i32));
        let ga = -(p as f64) * mp / (fact * m1.powi(p as i32 + 1));
        let v = ga * ga * mean_covariance(intensity, intensity)
            + 2.0 * ga * gb * mean_covariance(intensity, &pw)
            + gb * gb * mean_covariance(&pw, &pw);
        ratios.push(MomentRatio { p, value, se: v.max(0.0).sqrt() });
    }
    let mut sorted = intensity.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (k, x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-x / m1).exp();
        d = d.max((k as f64 + 1.0) / n as f64 - cdf).max(cdf - k as f64 / n as f64);
    }
    let ks_critical = ks_coefficient(0.05)? / (n as f64).sqrt();
    Ok(ExponentialReport {
        samples: n,
        mean: m1,
        ratios,
        ks_statistic: d,
        ks_critical,
        ks_pass: d <= ks_critical,
        note: "KS uses the sample mean as the exponential scale, so the tabulated critical value is conservative"
            .into(),
    })
}

/// One row of a [`SelfAverageReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxVariance {
    /// Box side in cells.
    pub side: usize,
    pub cells: usize,
    pub mean: f64,
    /// Across-realization variance of the box-averaged intensity.
    pub variance: f64,
    /// Standard error of `variance`.
    pub se: f64,
}

/// Variance of box-averaged intensity against box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAverageReport {
    pub rows: Vec<BoxVariance>,
    /// Indices `k` where `variance[k + 1]` exceeds `variance[k]` by more
    /// than two combined standard errors.
    pub increases: Vec<usize>,
}

impl SelfAverageReport {
    pub fn is_decreasing(&self) -> bool {
        self.increases.is_empty()
    }
}

/// Compute the variance of the intensity averaged over centered boxes of
/// the given sides within square windows of side `window_side` in `d`
/// dimensions.
pub fn self_average(windows: &[Vec<f64>], window_side: usize, d: usize, box_sides: &[usize]) -> Result<SelfAverageReport> {
    if windows.len() < 4 {
        return Err(Error::Config(format!("self-averaging needs at least 4 realizations, got {}", windows.len())));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::Config(format!("self-averaging supports d = 1 or 2, got {d}")));
    }
    let cells = window_side.pow(d as u32);
    if let Some(w) = windows.iter().find(|w| w.len() != cells) {
        return Err(Error::Config(format!("window has {} cells, expected {cells}", w.len())));
    }
    let mut rows = Vec::with_capacity(box_sides.len());
    for &a in box_sides {
        if a == 0 || a > window_side {
            return Err(Error::Config(format!("box side {a} does not fit in a window of side {window_side}")));
        }
        let start = (window_side - a) / 2;
        let idx: Vec<usize> = match d {
            1 => (start..start + a).collect(),
            _ => (start..start + a)
                .flat_map(|i| (start..start + a).map(move |j| i * window_side + j))
                .collect(),
        };
        let avg: Vec<f64> = windows
            .iter()
            .map(|w| idx.iter().map(|&i| w[i]).sum::<f64>() / idx.len() as f64)
            .collect();
        let n = avg.len() as f64;
        let m = mean(&avg);
        let dev2: Vec<f64> = avg.iter().map(|v| (v - m) * (v - m)).collect();
        let variance = dev2.iter().sum::<f64>() / (n - 1.0);
        let m4 = mean(&dev2.iter().map(|v| v * v).collect::<Vec<_>>());
        let se = ((m4 - variance * variance).max(0.0) / n).sqrt();
        rows.push(BoxVariance { side: a, cells: idx.len(), mean: m, variance, se });
    }
    let increases = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].variance > w[0].variance + 2.0 * w[0].se.hypot(w[1].se))
        .map(|(k, _)| k)
        .collect();
    Ok(SelfAverageReport { rows, increases })
}

/// One bin of an intensity histogram with the exponential reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Expected count under the exponential law with the sample mean.
    pub reference: f64,
}

/// Histogram of intensity samples on `bins` equal bins over
/// `[0, max_over_mean * mean]`.
pub fn intensity_histogram(intensity: &[f64], bins: usize, max_over_mean: f64) -> Result<Vec<HistogramBin>> {
    if bins == 0 || intensity.is_empty() {
        return Err(Error::Config("histogram needs at least one bin and one sample".into()));
    }
    let m = mean(intensity);
    if !(m > 0.0) {
        return Err(Error::Diagnostic(format!("mean intensity {m} is not positive")));
    }
    let top = max_over_mean * m;
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for &i in intensity {
        let k = (i / width) as usize;
        if k < bins {
            counts[k] += 1;
        }
    }
    let n = intensity.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
            HistogramBin { lo, hi, count, reference: n * ((-lo / m).exp() - (-hi / m).exp()) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussianity::fixtures::{
        deterministic_stats, exponential_samples, iid_exponential_windows, synthetic_gaussian_stats,
    };
    use num_complex::Complex64;

    #[test]
    fn scintillation_controls() {
        let det = deterministic_stats(&[Complex64::new(0.5, 0.5)], 100).unwrap();
        assert_eq!(scintillation_index(&det, &[0]).unwrap()[0].value, 0.0);
        let g = synthetic_gaussian_stats(&[Complex64::new(2.0, 0.0)], &[Complex64::new(0.0, 0.0)], 50_000, 8).unwrap();
        let s = scintillation_index(&g, &[0]).unwrap()[0];
        assert!((s.value - 1.0).abs() < 4.0 * s.se, "{s:?}");
        let zero = deterministic_stats(&[Complex64::new(0.0, 0.0)], 10).unwrap();
        assert!(matches!(scintillation_index(&zero, &[0]), Err(Error::Diagnostic(_))));
    }

    #[test]
    fn scintillation_is_scale_invariant() {
        let x = exponential_samples(1.0, 5000, 2);
        let y: Vec<f64> = x.iter().map(|v| 3.7 * v).collect();
        let a = scintillation_from_samples(&x).unwrap();
        let b = scintillation_from_samples(&y).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.se - b.se).abs() < 1e-12);
    }

    #[test]
    fn exponential_samples_pass() {
        let x = exponential_samples(2.5, 20_000, 17);
        let r = exponential_law_test(&x).unwrap();
        assert!(r.ks_pass, "{r:?}");
        assert!(r.ratios_pass(&[2, 3, 4], 4.0), "{r:?}");
    }

    #[test]
    fn constant_samples_fail() {
        let r = exponential_law_test(&vec![1.3; 2000]).unwrap();
        assert!(!r.ks_pass);
        for (ratio, fact) in r.ratios.iter().zip([2.0, 6.0, 24.0]) {
            assert!((ratio.value - 1.0 / fact).abs() < 1e-12);
        }
        assert!(matches!(exponential_law_test(&[1.0; 10]), Err(Error::Size(_))));
    }

    #[test]
    fn gaussian_intensity_passes() {
        let g = synthetic_gaussian_stats(&[Complex64::new(1.0, 0.0)], &[Complex64::new(0.0, 0.0)], 10_000, 21).unwrap();
        let r = exponential_law_test(&g.intensity_samples(0)).unwrap();
        assert!(r.ks_pass && r.ratios_pass(&[2, 3], 4.0), "{r:?}");
    }

    #[test]
    fn iid_boxes_average_down() {
        let w = iid_exponential_windows(4000, 9, 1, 1.0, 6);
        let r = self_average(&w, 9, 1, &[1, 3, 9]).unwrap();
        assert!(r.is_decreasing());
        for row in &r.rows {
            let expect = 1.0 / row.cells as f64;
            assert!((row.variance - expect).abs() < 4.0 * row.se, "{row:?}");
        }
        let w2 = iid_exponential_windows(2000, 5, 2, 1.0, 7);
        let r2 = self_average(&w2, 5, 2, &[1, 5]).unwrap();
        assert!(r2.rows[1].variance < r2.rows[0].variance);
        assert!(self_average(&w2, 5, 2, &[7]).is_err());
    }

    #[test]
    fn histogram_counts() {
        let x = exponential_samples(1.0, 10_000, 3);
        let h = intensity_histogram(&x, 20, 5.0).unwrap();
        let inside: usize = h.iter().map(|b| b.count).sum();
        let ref_total: f64 = h.iter().map(|b| b.reference).sum();
        assert!((inside as f64 - ref_total).abs() < 0.02 * ref_total);
    }
}

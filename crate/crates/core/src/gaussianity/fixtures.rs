//! Synthetic ensembles with known statistics, used as positive and
//! negative controls for the test battery.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::propagator::{realization_stream, EnsembleStats};

/// Lower-triangular `L` with `L L^H = a` for a Hermitian positive
/// semi-definite row-major `n x n` matrix.
pub fn cholesky(a: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if a.len() != n * n {
        return Err(Error::Config(format!("matrix has {} entries, expected {n} x {n}", a.len())));
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if s.re < -1e-12 * a[i * n + i].re.abs().max(1.0) || s.im.abs() > 1e-10 * s.re.abs().max(1.0) {
                    return Err(Error::Config("covariance is not Hermitian positive semi-definite".into()));
                }
                l[i * n + i] = Complex64::new(s.re.max(0.0).sqrt(), 0.0);
            } else {
                let d = l[j * n + j].re;
                l[i * n + j] = if d > 0.0 { s / d } else { Complex64::new(0.0, 0.0) };
            }
        }
    }
    Ok(l)
}

fn stats_from(samples: Vec<Vec<Complex64>>) -> Result<EnsembleStats> {
    let n = samples.first().map(Vec::len).unwrap_or(0);
    EnsembleStats::from_samples((0..n).collect(), Vec::new(), Vec::new(), samples, Vec::new())
}

/// `n_samples` draws of a circular complex gaussian vector with covariance
/// `E[(u - mean)(u - mean)^H] = cov` and the given mean.
pub fn synthetic_gaussian_stats(
    cov: &[Complex64],
    mean: &[Complex64],
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    let n = mean.len();
    let l = cholesky(cov, n)?;
    let mut rng = realization_stream(seed, 0);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let samples = (0..n_samples)
        .map(|_| {
            let z: Vec<Complex64> = (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * scale
                })
                .collect();
            (0..n).map(|i| mean[i] + (0..=i).map(|k| l[i * n + k] * z[k]).sum::<Complex64>()).collect()
        })
        .collect();
    stats_from(samples)
}

/// `n_samples` identical realizations of a fixed field.
pub fn deterministic_stats(values: &[Complex64], n_samples: usize) -> Result<EnsembleStats> {
    stats_from(vec![values.to_vec(); n_samples])
}

/// Fixed amplitudes with a uniformly random common phase: circular and
/// centered, but with non-gaussian intensity.
pub fn random_phase_stats(amplitudes: &[Complex64], n_samples: usize, seed: u64) -> Result<EnsembleStats> {
    let mut rng = realization_stream(seed, 0);
    let samples = (0..n_samples)
        .map(|_| {
            let phase = Complex64::cis(rng.random_range(0.0..std::f64::consts::TAU));
            amplitudes.iter().map(|a| a * phase).collect()
        })
        .collect();
    stats_from(samples)
}

/// Independent exponential samples with the given mean.
pub fn exponential_samples(mean: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = realization_stream(seed, 0);
    (0..n).map(|_| mean * rng.sample::<f64, _>(Exp1)).collect()
}

/// Intensity windows of `side^d` independent exponential cells per
/// realization.
pub fn iid_exponential_windows(n_realizations: usize, side: usize, d: usize, mean: f64, seed: u64) -> Vec<Vec<f64>> {
    let cells = side.pow(d as u32);
    let mut rng = realization_stream(seed, 0);
    (0..n_realizations)
        .map(|_| (0..cells).map(|_| mean * rng.sample::<f64, _>(Exp1)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.5),
            Complex64::new(0.5, -0.5),
            Complex64::new(1.0, 0.0),
        ];
        let l = cholesky(&a, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v: Complex64 = (0..2).map(|k| l[i * 2 + k] * l[j * 2 + k].conj()).sum();
                assert!((v - a[i * 2 + j]).norm() < 1e-14);
            }
        }
        let bad = vec![Complex64::new(-1.0, 0.0)];
        assert!(cholesky(&bad, 1).is_err());
    }

    #[test]
    fn synthetic_covariance() {
        let cov = vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.4), Complex64::new(0.3, -0.4), Complex64::new(1.0, 0.0)];
        let s = synthetic_gaussian_stats(&cov, &[Complex64::new(0.0, 0.0); 2], 20_000, 1).unwrap();
        let e = s.moment_of(|v| v[0] * v[1].conj());
        assert!(e.agrees_with(cov[1], 4.0));
        let pseudo = s.moment_of(|v| v[0] * v[1]);
        assert!(pseudo.agrees_with(Complex64::new(0.0, 0.0), 4.0));
    }

    #[test]
    fn deterministic_and_phase_fixtures() {
        let d = deterministic_stats(&[Complex64::new(1.0, 1.0)], 5).unwrap();
        assert_eq!(d.count(), 5);
        let r = random_phase_stats(&[Complex64::new(2.0, 0.0)], 1000, 4).unwrap();
        assert!(r.intensity_samples(0).iter().all(|i| (i - 4.0).abs() < 1e-12));
        let e = exponential_samples(2.0, 10, 3);
        assert!(e.iter().all(|v| *v >= 0.0));
        assert_eq!(iid_exponential_windows(3, 4, 2, 1.0, 2)[0].len(), 16);
    }
}

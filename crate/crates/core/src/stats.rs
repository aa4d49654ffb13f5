//! Compensated summation and small statistical helpers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Neumaier compensated sum of reals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Fold another partial sum into this one.
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Neumaier compensated sum of complex numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &Self) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated mean of a slice.
pub fn mean(xs: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}

/// Compensated mean of a complex slice.
pub fn mean_complex(xs: &[Complex64]) -> Complex64 {
    let mut s = ComplexSum::new();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}

/// Standard error of the sample mean of real data.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let mut s = KahanSum::new();
    xs.iter().for_each(|&x| s.add((x - m) * (x - m)));
    (s.value() / (n - 1.0) / n).sqrt()
}

/// Standard errors of the real and imaginary parts of a complex sample mean.
pub fn std_error_complex(xs: &[Complex64]) -> (f64, f64) {
    let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
    (std_error(&re), std_error(&im))
}

/// Delete-one jackknife for a scalar statistic of per-sample records.
///
/// `stat` receives the sum of per-sample vectors and the sample count.
/// Returns the full-sample estimate and its jackknife standard error.
pub fn jackknife<F>(samples: &[Vec<f64>], stat: F) -> (f64, f64)
where
    F: Fn(&[f64], usize) -> f64,
{
    let n = samples.len();
    let k = samples.first().map(Vec::len).unwrap_or(0);
    let mut tot = vec![KahanSum::new(); k];
    for s in samples {
        for (acc, v) in tot.iter_mut().zip(s) {
            acc.add(*v);
        }
    }
    let total: Vec<f64> = tot.iter().map(KahanSum::value).collect();
    let full = stat(&total, n);
    if n < 2 {
        return (full, f64::NAN);
    }
    let mut loo = vec![0.0; k];
    let mut vals = Vec::with_capacity(n);
    for s in samples {
        for i in 0..k {
            loo[i] = total[i] - s[i];
        }
        vals.push(stat(&loo, n - 1));
    }
    let m = mean(&vals);
    let var: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    (full, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn merge_equals_concatenation() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let mut a = KahanSum::new();
        let mut b = KahanSum::new();
        let mut all = KahanSum::new();
        xs[..40].iter().for_each(|&x| a.add(x));
        xs[40..].iter().for_each(|&x| b.add(x));
        xs.iter().for_each(|&x| all.add(x));
        a.merge(&b);
        assert!((a.value() - all.value()).abs() <= 1e-12 * all.value().abs());
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 7919) % 101) as f64).collect();
        let recs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let (m, se) = jackknife(&recs, |s, n| s[0] / n as f64);
        assert!((m - mean(&xs)).abs() < 1e-12);
        assert!((se - std_error(&xs)).abs() < 1e-10);
    }
}

//! Moments of complex gaussian vectors in terms of first and second moments.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::pairings::enumerate_pairings;

/// `F(h, h', g)`: the moment `E[prod_j u_j prod_l v_l^*]` of a complex
/// gaussian vector with `E[u_j] = h_j`, `E[v_l^*] = h'_l` and
/// `E[u_j v_l^*] = g[j][l]` (row-major `p x q`), for a family whose
/// pseudo-covariances vanish.
pub fn gaussian_functional(h: &[Complex64], hp: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
    let (p, q) = (h.len(), hp.len());
    if g.len() != p * q {
        return Err(Error::Config(format!("g has {} entries, expected {p} x {q}", g.len())));
    }
    let mut total: Complex64 = h.iter().chain(hp).product();
    for set in enumerate_pairings(p, q)? {
        let mut term = Complex64::new(1.0, 0.0);
        for &(j, l) in set.pairs() {
            term *= g[j * q + l] - h[j] * hp[l];
        }
        for j in (0..p).filter(|&j| !set.contains_first(j)) {
            term *= h[j];
        }
        for l in (0..q).filter(|&l| !set.contains_second(l)) {
            term *= hp[l];
        }
        total += term;
    }
    Ok(total)
}

/// Permanent of the `n x n` row-major matrix `a` by Ryser's formula with
/// Gray-code updates.
pub fn permanent(a: &[Complex64], n: usize) -> Result<Complex64> {
    if a.len() != n * n {
        return Err(Error::Config(format!("matrix has {} entries, expected {n} x {n}", a.len())));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if n > 20 {
        return Err(Error::Size(format!("permanent of order {n} is too large")));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let sign = if next & (1 << col) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += a[i * n + col] * sign;
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        let parity = if (n - next.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * parity;
    }
    Ok(total)
}

/// `F~(g)`: the moment of a centered circular gaussian vector, zero when
/// `p != q` and the permanent of `g` otherwise.
pub fn centered_functional(g: &[Complex64], p: usize, q: usize) -> Result<Complex64> {
    if g.len() != p * q {
        return Err(Error::Config(format!("g has {} entries, expected {p} x {q}", g.len())));
    }
    if p != q {
        return Ok(Complex64::new(0.0, 0.0));
    }
    permanent(g, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut v = p.clone();
                v.insert(pos, n - 1);
                out.push(v);
            }
        }
        out
    }

    fn brute_permanent(a: &[Complex64], n: usize) -> Complex64 {
        permutations(n).iter().map(|s| (0..n).map(|i| a[i * n + s[i]]).product::<Complex64>()).sum()
    }

    fn sample_matrix(n: usize) -> Vec<Complex64> {
        (0..n * n).map(|k| c((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos())).collect()
    }

    #[test]
    fn telescoping_cases() {
        let g = [c(0.3, -0.2)];
        let f = gaussian_functional(&[c(1.0, 2.0)], &[c(-0.5, 0.1)], &g).unwrap();
        assert!((f - g[0]).norm() < 1e-15);
        let h = [c(0.4, 0.9)];
        assert_eq!(gaussian_functional(&h, &[], &[]).unwrap(), h[0]);
    }

    #[test]
    fn centered_fourth_moment() {
        let g = sample_matrix(2);
        let zero = [c(0.0, 0.0); 2];
        let f = gaussian_functional(&zero, &zero, &g).unwrap();
        let expect = g[0] * g[3] + g[1] * g[2];
        assert!((f - expect).norm() < 1e-15);
        assert!((centered_functional(&g, 2, 2).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn centered_cases() {
        assert_eq!(centered_functional(&[c(1.0, 0.0); 2], 2, 1).unwrap(), c(0.0, 0.0));
        assert_eq!(centered_functional(&[c(0.5, 0.5)], 1, 1).unwrap(), c(0.5, 0.5));
        let id = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(centered_functional(&id, 2, 2).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn ryser_matches_permutation_sum() {
        for n in 1..=5 {
            let a = sample_matrix(n);
            let r = permanent(&a, n).unwrap();
            let b = brute_permanent(&a, n);
            assert!((r - b).norm() < 1e-10 * b.norm().max(1.0), "n = {n}");
        }
        assert_eq!(brute_permanent(&sample_matrix(3), 3), {
            let a = sample_matrix(3);
            permutations(3).iter().map(|s| a[s[0]] * a[3 + s[1]] * a[6 + s[2]]).sum::<Complex64>()
        });
    }

    #[test]
    fn zero_mean_reduces_to_centered() {
        for (p, q) in [(1, 2), (2, 2), (3, 3), (3, 1)] {
            let g: Vec<Complex64> = (0..p * q).map(|k| c(1.0 + k as f64 * 0.1, -0.3 * k as f64)).collect();
            let f = gaussian_functional(&vec![c(0.0, 0.0); p], &vec![c(0.0, 0.0); q], &g).unwrap();
            let fc = centered_functional(&g, p, q).unwrap();
            assert!((f - fc).norm() < 1e-12);
        }
    }

    #[test]
    fn multilinear_in_each_entry() {
        let h = [c(0.2, 0.1), c(-0.3, 0.4)];
        let hp = [c(0.5, -0.2), c(0.1, 0.1)];
        let g = sample_matrix(2);
        for k in 0..4 {
            let at = |t: f64| {
                let mut gg = g.clone();
                gg[k] += c(t, 0.0);
                gaussian_functional(&h, &hp, &gg).unwrap()
            };
            let (f0, f1, f2) = (at(0.0), at(1.0), at(2.0));
            assert!((f2 - 2.0 * f1 + f0).norm() < 1e-12);
        }
    }
}

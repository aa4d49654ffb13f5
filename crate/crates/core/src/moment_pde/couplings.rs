//! The sign matrix `Theta` and the shift matrices `A_{j,l}`, `B_{j,j'}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair of factors coupled by one scattering event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coupling {
    /// `(j, l)`: unconjugated factor `j` with conjugated factor `l`.
    Cross(usize, usize),
    /// `(j, j')`, `j < j'`, two unconjugated factors.
    Direct(usize, usize),
    /// `(l, l')`, `l < l'`, two conjugated factors.
    Conjugate(usize, usize),
}

/// Coupling matrices for moments of order `(p, q)` in dimension `d`.
///
/// Matrices are stored row-major; `A` and `B` have `(p + q) d` rows and
/// `d` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrices {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    /// Diagonal of `Theta`.
    pub theta: Vec<f64>,
    pub a: Vec<((usize, usize), Vec<f64>)>,
    pub b: Vec<(Coupling, Vec<f64>)>,
}

fn block_matrix(p: usize, q: usize, d: usize, blocks: &[(usize, f64)]) -> Vec<f64> {
    let rows = (p + q) * d;
    let mut m = vec![0.0; rows * d];
    for &(blk, s) in blocks {
        for i in 0..d {
            m[(blk * d + i) * d + i] = s;
        }
    }
    m
}

impl CouplingMatrices {
    pub fn dim_total(&self) -> usize {
        (self.p + self.q) * self.d
    }

    /// `M^T Theta N` for two `(p+q)d x d` matrices.
    pub fn theta_form(&self, m: &[f64], n: &[f64]) -> Vec<f64> {
        let (rows, d) = (self.dim_total(), self.d);
        let mut out = vec![0.0; d * d];
        for r in 0..rows {
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += m[r * d + i] * self.theta[r] * n[r * d + j];
                }
            }
        }
        out
    }

    /// `k^T M^T Theta v`.
    pub fn phase_form(&self, k: &[f64], m: &[f64], v: &[f64]) -> f64 {
        let d = self.d;
        (0..self.dim_total())
            .map(|r| (0..d).map(|i| k[i] * m[r * d + i]).sum::<f64>() * self.theta[r] * v[r])
            .sum()
    }

    pub fn a_matrix(&self, j: usize, l: usize) -> Option<&[f64]> {
        self.a.iter().find(|(k, _)| *k == (j, l)).map(|(_, m)| m.as_slice())
    }

    /// Check the algebraic identities relating `Theta`, `A` and `B`.
    pub fn verify(&self) -> Result<()> {
        let d = self.d;
        let identity = |s: f64| -> Vec<f64> {
            let mut m = vec![0.0; d * d];
            for i in 0..d {
                m[i * d + i] = s;
            }
            m
        };
        let fail = |what: String| Err(Error::Numeric(format!("coupling identity violated: {what}")));
        for ((j, l), m) in &self.a {
            if self.theta_form(m, m) != identity(0.0) {
                return fail(format!("A_{{{j},{l}}}^T Theta A_{{{j},{l}}} != 0"));
            }
            for ((j2, l2), m2) in &self.a {
                if j2 == j && l2 != l && self.theta_form(m, m2) != identity(1.0) {
                    return fail(format!("A_{{{j},{l}}}^T Theta A_{{{j2},{l2}}} != I"));
                }
            }
        }
        for (c, m) in &self.b {
            let expect = match c {
                Coupling::Direct(..) => identity(2.0),
                _ => identity(-2.0),
            };
            if self.theta_form(m, m) != expect {
                return fail(format!("B^T Theta B for {c:?}"));
            }
        }
        Ok(())
    }
}

/// Build `Theta`, every `A_{j,l}` and every `B_{j,j'}` and verify their
/// identities.
pub fn build_couplings(p: usize, q: usize, d: usize) -> Result<CouplingMatrices> {
    if p + q == 0 || d == 0 {
        return Err(Error::Config(format!("couplings need p + q >= 1 and d >= 1, got p = {p}, q = {q}, d = {d}")));
    }
    if p + q > 8 || d > 3 {
        return Err(Error::Size(format!("couplings are built for p + q <= 8 and d <= 3, got p + q = {}, d = {d}", p + q)));
    }
    let theta: Vec<f64> = (0..p + q).flat_map(|blk| vec![if blk < p { 1.0 } else { -1.0 }; d]).collect();
    let mut a = Vec::new();
    for j in 0..p {
        for l in 0..q {
            a.push(((j, l), block_matrix(p, q, d, &[(j, 1.0), (p + l, 1.0)])));
        }
    }
    let mut b = Vec::new();
    for j in 0..p {
        for j2 in j + 1..p {
            b.push((Coupling::Direct(j, j2), block_matrix(p, q, d, &[(j, 1.0), (j2, -1.0)])));
        }
    }
    for l in 0..q {
        for l2 in l + 1..q {
            b.push((Coupling::Conjugate(l, l2), block_matrix(p, q, d, &[(p + l, 1.0), (p + l2, -1.0)])));
        }
    }
    let c = CouplingMatrices { p, q, d, theta, a, b };
    c.verify()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_pair() {
        let c = build_couplings(1, 1, 1).unwrap();
        assert_eq!(c.theta, vec![1.0, -1.0]);
        assert_eq!(c.a_matrix(0, 0).unwrap(), &[1.0, 1.0]);
        assert_eq!(c.theta_form(c.a_matrix(0, 0).unwrap(), c.a_matrix(0, 0).unwrap()), vec![0.0]);
    }

    #[test]
    fn direct_pair() {
        let c = build_couplings(2, 0, 1).unwrap();
        assert_eq!(c.b.len(), 1);
        assert_eq!(c.b[0].1, vec![1.0, -1.0]);
        assert_eq!(c.theta_form(&c.b[0].1, &c.b[0].1), vec![2.0]);
    }

    #[test]
    fn counts_and_identities() {
        let c = build_couplings(2, 2, 1).unwrap();
        assert_eq!(c.a.len(), 4);
        assert_eq!(c.b.len(), 2);
        let c3 = build_couplings(2, 3, 2).unwrap();
        assert_eq!(c3.a.len(), 6);
        assert_eq!(c3.b.len(), 1 + 3);
    }

    #[test]
    fn reduced_phase() {
        let c = build_couplings(2, 2, 2).unwrap();
        let v = [0.3, -1.0, 2.0, 0.5, -0.7, 1.1, 0.2, -0.4];
        let k = [0.9, -0.2];
        for ((j, l), m) in &c.a {
            let direct: f64 = (0..2).map(|i| k[i] * (v[j * 2 + i] - v[(2 + l) * 2 + i])).sum();
            assert!((c.phase_form(&k, m, &v) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn guards() {
        assert!(build_couplings(0, 0, 1).is_err());
        assert!(build_couplings(5, 5, 1).is_err());
    }
}

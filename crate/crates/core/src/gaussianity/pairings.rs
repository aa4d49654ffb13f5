//! Sets of disjoint index pairs `(j, l)` between `p` unconjugated and `q`
//! conjugated factors.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Largest `p` or `q` accepted by [`enumerate_pairings`].
pub const MAX_PAIRING_ORDER: usize = 6;

/// A nonempty set of pairs `(j, l)`, `0 <= j < p`, `0 <= l < q`, with no
/// repeated first index and no repeated second index. Pairs are kept in
/// increasing order of `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairingSet {
    p: usize,
    q: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairingSet {
    pub fn new(p: usize, q: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        let mut used_j = vec![false; p];
        let mut used_l = vec![false; q];
        for &(j, l) in &pairs {
            if j >= p || l >= q {
                return Err(Error::Config(format!("pair ({j}, {l}) out of range for p = {p}, q = {q}")));
            }
            if used_j[j] || used_l[l] {
                return Err(Error::Config(format!("pair ({j}, {l}) repeats an index")));
            }
            used_j[j] = true;
            used_l[l] = true;
        }
        Ok(Self { p, q, pairs })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of pairs `m`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_first(&self, j: usize) -> bool {
        self.pairs.iter().any(|&(a, _)| a == j)
    }

    pub fn contains_second(&self, l: usize) -> bool {
        self.pairs.iter().any(|&(_, b)| b == l)
    }

    /// Pairs made only of indices the set leaves free.
    pub fn free_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in (0..self.p).filter(|&j| !self.contains_first(j)) {
            for l in (0..self.q).filter(|&l| !self.contains_second(l)) {
                out.push((j, l));
            }
        }
        out
    }

    /// Pairs outside the set that share exactly one index with it.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.p {
            for l in 0..self.q {
                let fj = self.contains_first(j);
                let fl = self.contains_second(l);
                if fj != fl || (fj && fl && !self.pairs.contains(&(j, l))) {
                    out.push((j, l));
                }
            }
        }
        out
    }
}

impl fmt::Display for PairingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.pairs.iter().map(|(j, l)| format!("({},{})", j + 1, l + 1)).collect();
        write!(f, "{{{}}}", body.join(","))
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `sum_{m=1}^{min(p,q)} C(p,m) C(q,m) m!`.
pub fn pairing_count(p: usize, q: usize) -> usize {
    (1..=p.min(q)).map(|m| binomial(p, m) * binomial(q, m) * (1..=m).product::<usize>()).sum()
}

fn extend(j: usize, p: usize, q: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    if j == p {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        return;
    }
    extend(j + 1, p, q, used, cur, out);
    for l in 0..q {
        if !used[l] {
            used[l] = true;
            cur.push((j, l));
            extend(j + 1, p, q, used, cur, out);
            cur.pop();
            used[l] = false;
        }
    }
}

/// All nonempty pairing sets for `(p, q)`, grouped by size `m` and ordered
/// lexicographically within each group.
pub fn enumerate_pairings(p: usize, q: usize) -> Result<Vec<PairingSet>> {
    if p > MAX_PAIRING_ORDER || q > MAX_PAIRING_ORDER {
        return Err(Error::Size(format!(
            "pairings are enumerated for p, q <= {MAX_PAIRING_ORDER}; got p = {p}, q = {q}"
        )));
    }
    let mut raw = Vec::new();
    extend(0, p, q, &mut vec![false; q], &mut Vec::new(), &mut raw);
    raw.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(raw.into_iter().map(|pairs| PairingSet { p, q, pairs }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn small_counts() {
        let one = enumerate_pairings(1, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].pairs(), &[(0, 0)]);
        let two = enumerate_pairings(2, 2).unwrap();
        assert_eq!(two.len(), 6);
        assert_eq!(two.iter().filter(|s| s.len() == 1).count(), 4);
        assert_eq!(two.iter().filter(|s| s.len() == 2).count(), 2);
        assert!(enumerate_pairings(3, 0).unwrap().is_empty());
    }

    #[test]
    fn counts_match_formula_and_brute_force() {
        for p in 0..=4 {
            for q in 0..=4 {
                let sets = enumerate_pairings(p, q).unwrap();
                assert_eq!(sets.len(), pairing_count(p, q));
                let all: Vec<(usize, usize)> = (0..p).flat_map(|j| (0..q).map(move |l| (j, l))).collect();
                let mut brute = HashSet::new();
                for mask in 1u32..(1u32 << all.len()) {
                    let chosen: Vec<(usize, usize)> =
                        (0..all.len()).filter(|&i| mask >> i & 1 == 1).map(|i| all[i]).collect();
                    if let Ok(s) = PairingSet::new(p, q, chosen) {
                        brute.insert(s);
                    }
                }
                let got: HashSet<PairingSet> = sets.into_iter().collect();
                assert_eq!(got, brute, "p = {p}, q = {q}");
            }
        }
    }

    #[test]
    fn complements() {
        let s = PairingSet::new(3, 3, vec![(0, 0), (1, 1)]).unwrap();
        assert_eq!(s.free_pairs(), vec![(2, 2)]);
        let bar = s.overlapping_pairs();
        assert_eq!(bar, vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]);
        assert_eq!(s.to_string(), "{(1,1),(2,2)}");
    }

    #[test]
    fn guards() {
        assert!(matches!(enumerate_pairings(7, 1), Err(Error::Size(_))));
        assert!(PairingSet::new(2, 2, vec![(0, 0), (1, 0)]).is_err());
        assert!(PairingSet::new(2, 2, vec![(0, 3)]).is_err());
    }
}

//! Multi-index combinatorics for monomials and partial derivatives.

use crate::real::Real;

/// Exponent vector in `N_0^n`, used both for monomials `x^nu` and to label
/// partial derivatives.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex { exponents }
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex {
            exponents: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Total order `|nu|`.
    pub fn order(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `nu! = prod_i nu_i!`. Exact for `|nu| <= 20`.
    pub fn factorial(&self) -> u64 {
        self.exponents
            .iter()
            .map(|&e| (1..=u64::from(e)).product::<u64>().max(1))
            .product()
    }

    /// Monomial `x^nu`.
    pub fn pow<R: Real>(&self, x: &[R]) -> R {
        debug_assert_eq!(x.len(), self.exponents.len());
        let mut acc = R::one();
        for (&xi, &e) in x.iter().zip(&self.exponents) {
            acc = acc * xi.powi(e as i32);
        }
        acc
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

/// Number of distinct partial derivatives of order at most `p` in `n`
/// variables: `pi(p) = sum_{q=0..p} C(q+n-1, n-1)`.
pub fn pi_count(p: u32, n: usize) -> usize {
    assert!(n >= 1, "dimension must be at least 1");
    (0..=u64::from(p))
        .map(|q| binomial(q + n as u64 - 1, n as u64 - 1))
        .sum::<u64>() as usize
}

/// All multi-indices with `|nu| <= p` in graded lexicographic order: sorted
/// by total order first, then lexicographically ascending. This fixes the row
/// order of the moment-matching system and the layout of weight files.
pub fn enumerate_multi_indices(p: u32, n: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(pi_count(p, n));
    let mut current = vec![0u32; n];
    for degree in 0..=p {
        compositions(degree, 0, &mut current, &mut out);
    }
    out
}

fn compositions(left: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if slot + 1 == current.len() {
        current[slot] = left;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for first in 0..=left {
        current[slot] = first;
        compositions(left - first, slot + 1, current, out);
    }
}

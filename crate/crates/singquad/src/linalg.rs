//! Dense LU solver for the small moment-matching systems (internal).

use crate::real::Real;

/// Row-major square matrix with LU factors and permutation.
pub(crate) struct LuSolver<R: Real> {
    n: usize,
    lu: Vec<R>,
    perm: Vec<usize>,
    singular: bool,
}

impl<R: Real> LuSolver<R> {
    /// Factor a row-major `n x n` matrix with partial pivoting.
    pub(crate) fn new(matrix: &[R], n: usize) -> Self {
        assert_eq!(matrix.len(), n * n);
        let mut lu = matrix.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu[col * n + col].abs();
            for row in col + 1..n {
                let mag = lu[row * n + col].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = row;
                }
            }
            if pivot_mag == R::zero() || !pivot_mag.is_finite() {
                singular = true;
                continue;
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for row in col + 1..n {
                let factor = lu[row * n + col] / pivot;
                lu[row * n + col] = factor;
                for k in col + 1..n {
                    lu[row * n + k] = lu[row * n + k] - factor * lu[col * n + k];
                }
            }
        }
        LuSolver {
            n,
            lu,
            perm,
            singular,
        }
    }

    pub(crate) fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solve `A x = b`.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn solve(&self, b: &[R]) -> Vec<R> {
        let n = self.n;
        let mut x: Vec<R> = self.perm.iter().map(|&p| b[p]).collect();
        for row in 1..n {
            let mut acc = x[row];
            for k in 0..row {
                acc = acc - self.lu[row * n + k] * x[k];
            }
            x[row] = acc;
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for k in row + 1..n {
                acc = acc - self.lu[row * n + k] * x[k];
            }
            x[row] = acc / self.lu[row * n + row];
        }
        x
    }

    /// Infinity-norm condition number, computed from the explicit inverse.
    /// Exact and cheap at the sizes that occur here (up to ~45).
    pub(crate) fn condition_inf(&self, matrix: &[R]) -> R {
        if self.singular {
            return R::infinity();
        }
        let n = self.n;
        let norm_a = inf_norm(matrix, n);
        let mut norm_inv = R::zero();
        let mut inv_rows = vec![R::zero(); n * n];
        let mut e = vec![R::zero(); n];
        for col in 0..n {
            e[col] = R::one();
            let x = self.solve(&e);
            e[col] = R::zero();
            for row in 0..n {
                inv_rows[row * n + col] = x[row];
            }
        }
        for row in 0..n {
            let s = inv_rows[row * n..(row + 1) * n]
                .iter()
                .fold(R::zero(), |a, &v| a + v.abs());
            norm_inv = norm_inv.max(s);
        }
        norm_a * norm_inv
    }
}

pub(crate) fn inf_norm<R: Real>(matrix: &[R], n: usize) -> R {
    let mut norm = R::zero();
    for row in 0..n {
        let s = matrix[row * n..(row + 1) * n]
            .iter()
            .fold(R::zero(), |a, &v| a + v.abs());
        norm = norm.max(s);
    }
    norm
}

/// `||A x - b||_inf`.
pub(crate) fn residual_inf<R: Real>(matrix: &[R], n: usize, x: &[R], b: &[R]) -> R {
    let mut worst = R::zero();
    for row in 0..n {
        let mut acc = -b[row];
        for col in 0..n {
            acc = acc + matrix[row * n + col] * x[col];
        }
        worst = worst.max(acc.abs());
    }
    worst
}

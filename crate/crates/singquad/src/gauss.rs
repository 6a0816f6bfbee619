//! Gauss-Legendre nodes and weights (internal).

use crate::real::{real, real_usize, Real};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `(-1, 1)`.
///
/// Newton iteration on the Legendre recurrence; accurate to a few ulps for
/// the node counts used here (< 200).
pub(crate) fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    let nf = real_usize::<R>(n);
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess.
        let theta =
            real::<R>(std::f64::consts::PI) * (real_usize::<R>(i) + real(0.75)) / (nf + real(0.5));
        let mut x = theta.cos();
        let mut dp = R::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= real::<R>(1e-17) * x.abs().max(R::one()) {
                break;
            }
        }
        let w = real::<R>(2.0) / ((R::one() - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
        if n % 2 == 1 && i == n / 2 {
            nodes[i] = R::zero();
        }
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by upward recurrence.
fn legendre_with_derivative<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, R::zero());
    }
    for k in 2..=n {
        let kf = real_usize::<R>(k);
        let p2 = ((real::<R>(2.0) * kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = real_usize::<R>(n) * (x * p1 - p0) / (x * x - R::one());
    (p1, d)
}

/// Integrates `f` on `[a, b]` with an `n`-point Gauss-Legendre rule.
#[cfg(test)]
pub(crate) fn integrate_gl<R: Real, F: Fn(R) -> R>(f: F, a: R, b: R, n: usize) -> R {
    let (nodes, weights) = gauss_legendre::<R>(n);
    let half = real::<R>(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    let mut acc = R::zero();
    for (x, w) in nodes.iter().zip(&weights) {
        acc = acc + *w * f(mid + rad * *x);
    }
    acc * rad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_nodes_match_reference() {
        let (nodes, weights) = gauss_legendre::<f64>(5);
        let expect_nodes = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let expect_weights = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        for i in 0..5 {
            assert!((nodes[i] - expect_nodes[i]).abs() < 1e-14);
            assert!((weights[i] - expect_weights[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // 20 points integrate x^38 exactly on [-1, 1]: 2/39.
        let v = integrate_gl(|x: f64| x.powi(38), -1.0, 1.0, 20);
        assert!((v - 2.0 / 39.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1usize, 2, 7, 33, 64] {
            let (_, w) = gauss_legendre::<f64>(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: weight sum {s}");
        }
    }
}

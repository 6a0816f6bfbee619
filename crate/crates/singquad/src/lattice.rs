//! Trapezoidal lattice sums over `h Z^n`, restricted to the integrand's
//! support, with punctured variants that skip nodes near the singularity.
//!
//! All sums traverse the index box in row-major order and accumulate with
//! compensated arithmetic, so a given call is bit-reproducible.

use crate::error::{Error, Result};
use crate::grid::GridContext;
use crate::real::{CompensatedSum, Real};

const MAX_DIM: usize = 3;

/// Plain trapezoidal rule `h^n sum f(y)` over all lattice nodes with
/// `|y|_inf <= support_radius + h`. The integrand must vanish outside the
/// ball of `support_radius`.
pub fn trapezoid<R: Real, F>(f: F, support_radius: R, grid: &GridContext<R>) -> Result<R>
where
    F: Fn(&[R]) -> R,
{
    sum_excluding(&f, support_radius, grid, &[])
}

/// Trapezoidal sum excluding the node at the origin, where a singular
/// integrand may be undefined.
pub fn punctured_trapezoid<R: Real, F>(f: F, support_radius: R, grid: &GridContext<R>) -> Result<R>
where
    F: Fn(&[R]) -> R,
{
    sum_excluding(&f, support_radius, grid, &[[0; MAX_DIM]])
}

/// Trapezoidal sum excluding every node `h c` for `c` in the stencil.
/// The stencil must contain the origin.
pub fn stencil_punctured_trapezoid<R: Real, F>(
    f: F,
    support_radius: R,
    grid: &GridContext<R>,
    stencil: &[Vec<i64>],
) -> Result<R>
where
    F: Fn(&[R]) -> R,
{
    let dim = grid.dim();
    let mut excluded = Vec::with_capacity(stencil.len());
    let mut has_origin = false;
    for c in stencil {
        if c.len() != dim {
            return Err(Error::InvalidParameters(format!(
                "stencil point {c:?} does not match dimension {dim}"
            )));
        }
        let mut node = [0i64; MAX_DIM];
        node[..dim].copy_from_slice(c);
        has_origin |= c.iter().all(|&k| k == 0);
        excluded.push(node);
    }
    if !has_origin {
        return Err(Error::InvalidParameters(
            "stencil for a punctured sum must contain the origin".into(),
        ));
    }
    sum_excluding(&f, support_radius, grid, &excluded)
}

/// Shared walker over the index box of the support ball, inflated by one
/// cell. Nodes listed in `excluded` are skipped.
pub(crate) fn sum_excluding<R: Real, F>(
    f: &F,
    support_radius: R,
    grid: &GridContext<R>,
    excluded: &[[i64; MAX_DIM]],
) -> Result<R>
where
    F: Fn(&[R]) -> R,
{
    let dim = grid.dim();
    let h = grid.spacing();
    if !(support_radius >= R::zero() && support_radius.is_finite()) {
        return Err(Error::InvalidParameters(
            "support radius must be non-negative and finite".into(),
        ));
    }
    // Bounding box of the support ball, one cell of slack on each side.
    let extent = (support_radius / h + R::one() + R::from_f64(1e-9).unwrap())
        .floor()
        .to_i64()
        .ok_or_else(|| {
            Error::InvalidParameters("support radius spans too many lattice cells".into())
        })?;

    let mut index = [-extent; MAX_DIM];
    let mut point = [R::zero(); MAX_DIM];
    let mut acc = CompensatedSum::<R>::new();
    'outer: loop {
        let skip = excluded.iter().any(|c| c[..dim] == index[..dim]);
        if !skip {
            for d in 0..dim {
                point[d] = h * R::from_i64(index[d]).unwrap();
            }
            let value = f(&point[..dim]);
            if !value.is_finite() {
                return Err(Error::EvaluationFailure {
                    node: point[..dim]
                        .iter()
                        .map(|p| p.to_f64().unwrap_or(f64::NAN))
                        .collect(),
                });
            }
            acc.add(value);
        }
        // Row-major advance.
        for d in (0..dim).rev() {
            index[d] += 1;
            if index[d] <= extent {
                continue 'outer;
            }
            index[d] = -extent;
        }
        break;
    }
    Ok(h.powi(dim as i32) * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::default_cutoff;
    use crate::gauss::integrate_gl;
    use crate::real::norm2;

    fn grid(dim: usize, h: f64) -> GridContext<f64> {
        GridContext::new(dim, h, vec![0.0; dim], vec![0; dim], 1.0, 2.0, 6.0).unwrap()
    }

    #[test]
    fn zero_integrand_sums_to_zero() {
        let g = grid(2, 0.25);
        assert_eq!(trapezoid(|_: &[f64]| 0.0, 1.0, &g).unwrap(), 0.0);
        assert_eq!(punctured_trapezoid(|_: &[f64]| 0.0, 1.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn single_interior_node_hat() {
        // Hat with f(0) = 1 supported on (-h, h); only the origin contributes.
        let g = grid(1, 0.5);
        let hat = |x: &[f64]| (1.0 - (x[0] / 0.5).abs()).max(0.0);
        let v = trapezoid(hat, 0.5, &g).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn window_matches_polar_oracle_in_2d() {
        // Trapezoid is spectrally accurate on smooth compactly supported
        // integrands. The cutoff profile has large high-order derivatives,
        // so the 1e-12 regime is reached around h = 1/256.
        let c = default_cutoff::<f64>();
        let g = grid(2, 1.0 / 256.0);
        let f = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.0, x)
        };
        let got = trapezoid(f, 1.0, &g).unwrap();
        // Oracle: 2 pi int r profile(r) dr, exact monomial on the plateau
        // plus Gauss-Legendre across the transition.
        let radial =
            0.75f64.powi(2) / 2.0 + integrate_gl(|r: f64| r * c.eval_radial(r), 0.75, 1.0, 120);
        let oracle = 2.0 * std::f64::consts::PI * radial;
        assert!(
            (got - oracle).abs() <= 1e-12 * oracle.abs(),
            "trapezoid {got:.17e} vs oracle {oracle:.17e}"
        );
    }

    #[test]
    fn punctured_equals_trapezoid_of_zeroed_function() {
        let c = default_cutoff::<f64>();
        let g = grid(2, 0.125);
        let f = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.0, x) * (1.0 + x[0])
        };
        let f_zeroed = {
            let f = f.clone();
            move |x: &[f64]| {
                if x.iter().all(|&c| c == 0.0) {
                    0.0
                } else {
                    f(x)
                }
            }
        };
        let a = punctured_trapezoid(f, 1.0, &g).unwrap();
        let b = trapezoid(f_zeroed, 1.0, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn punctured_agrees_with_naive_summation_on_singular_integrand() {
        // n = 1, gamma = -1/2, window factor; naive double-precision loop.
        let c = default_cutoff::<f64>();
        let h = 1.0 / 32.0;
        let g = grid(1, h);
        let f = {
            let c = c.clone();
            move |x: &[f64]| x[0].abs().powf(-0.5) * c.eval_window(1.0, x)
        };
        let got = punctured_trapezoid(f, 1.0, &g).unwrap();

        let mut naive = 0.0f64;
        let extent = ((1.0 / h) as i64) + 1;
        for i in -extent..=extent {
            if i == 0 {
                continue;
            }
            let x = h * i as f64;
            naive += x.abs().powf(-0.5) * c.eval_window(1.0, &[x]);
        }
        naive *= h;
        assert!((got - naive).abs() <= 1e-13 * naive.abs());
    }

    #[test]
    fn stencil_puncture_identity() {
        let c = default_cutoff::<f64>();
        let h = 0.125;
        let g = grid(2, h);
        let f = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.0, x) * (1.0 + x[0] - 0.5 * x[1])
        };
        let full = trapezoid(f.clone(), 1.0, &g).unwrap();
        let st = vec![vec![0, 0], vec![1, 0]];
        let punct = stencil_punctured_trapezoid(f.clone(), 1.0, &g, &st).unwrap();
        let expected = full - h * h * (f(&[0.0, 0.0]) + f(&[h, 0.0]));
        assert!((punct - expected).abs() < 1e-14 * full.abs().max(1.0));
    }

    #[test]
    fn stencil_must_contain_origin() {
        let g = grid(2, 0.25);
        let st = vec![vec![1, 0]];
        let err = stencil_punctured_trapezoid(|_: &[f64]| 1.0, 1.0, &g, &st);
        assert!(err.is_err());
    }

    #[test]
    fn single_point_stencil_equals_punctured() {
        let g = grid(2, 0.25);
        let c = default_cutoff::<f64>();
        let f = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.0, x)
        };
        let a = punctured_trapezoid(f.clone(), 1.0, &g).unwrap();
        let b = stencil_punctured_trapezoid(f, 1.0, &g, &[vec![0, 0]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_evaluation_is_reported_with_node() {
        let g = grid(1, 0.5);
        let f = |x: &[f64]| {
            if x[0] == 0.5 {
                f64::NAN
            } else {
                1.0
            }
        };
        match trapezoid(f, 1.0, &g) {
            Err(Error::EvaluationFailure { node }) => assert_eq!(node, vec![0.5]),
            other => panic!("expected evaluation failure, got {other:?}"),
        }
    }

    #[test]
    fn linearity_in_the_integrand() {
        let c = default_cutoff::<f64>();
        let g = grid(2, 0.1);
        let f1 = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.0, x)
        };
        let f2 = {
            let c = c.clone();
            move |x: &[f64]| c.eval_window(1.5, x) * x[0]
        };
        // A few deterministic pseudo-random coefficient pairs.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..5 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let a = ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0;
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let b = ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0;
            let combo = {
                let f1 = f1.clone();
                let f2 = f2.clone();
                move |x: &[f64]| a * f1(x) + b * f2(x)
            };
            let lhs = punctured_trapezoid(combo, 1.5, &g).unwrap();
            let rhs = a * punctured_trapezoid(f1.clone(), 1.5, &g).unwrap()
                + b * punctured_trapezoid(f2.clone(), 1.5, &g).unwrap();
            assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn translation_covariance() {
        // Punctured sum of f about the origin equals the punctured sum of
        // the translated integrand about the translated node.
        let c = default_cutoff::<f64>();
        let h = 0.125;
        let g = grid(2, h);
        let f = {
            let c = c.clone();
            move |x: &[f64]| norm2(x).powf(-0.5) * c.eval_window(1.0, x) * (1.0 + 0.3 * x[1])
        };
        let base = punctured_trapezoid(f.clone(), 1.0, &g).unwrap();

        let k = [3i64, -2];
        let shifted = {
            let f = f.clone();
            move |x: &[f64]| f(&[x[0] - h * k[0] as f64, x[1] - h * k[1] as f64])
        };
        let shift_norm = h * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        let mut node = [0i64; 3];
        node[..2].copy_from_slice(&k);
        let translated = sum_excluding(&shifted, 1.0 + shift_norm, &g, &[node]).unwrap();
        assert!((base - translated).abs() <= 1e-12 * base.abs());
    }

    #[test]
    fn spectral_accuracy_on_smooth_windows() {
        // Error against the exact integral should collapse far faster than
        // h^8 between successive halvings while above the roundoff floor.
        let c = default_cutoff::<f64>();
        let radial = 0.75 + integrate_gl(|r: f64| c.eval_radial(r), 0.75, 1.0, 120);
        let exact = 2.0 * radial; // n = 1 window integral
        let mut errors = Vec::new();
        for k in 0..3 {
            let h = 0.125 / (1 << k) as f64;
            let g = grid(1, h);
            let f = {
                let c = c.clone();
                move |x: &[f64]| c.eval_window(1.0, x)
            };
            let v = trapezoid(f, 1.0, &g).unwrap();
            errors.push((v - exact).abs());
        }
        for w in errors.windows(2) {
            if w[0] > 1e-13 {
                assert!(
                    w[1] < w[0] / 256.0,
                    "expected faster than h^8 decay: {:?}",
                    errors
                );
            }
        }
    }
}

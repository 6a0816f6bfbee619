//! Uniform Cartesian grid geometry around a point singularity.

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Grid geometry for quadrature around a singularity at `x0 = h (m + alpha)`.
///
/// `h0` is an upper bound on the spacings the context will be used with,
/// `window_radius` (`L`) is the radius of the localization window used during
/// weight synthesis, and `kernel_radius` (`L'`) is the radius inside which
/// the singular kernel is defined. Construction enforces
/// `0 < h < h0 <= 1`, `|alpha|_inf <= 1/2` and
/// `L + (3/2) h0 sqrt(n) < L'`.
///
/// Immutable after construction; safe to share across workers.
#[derive(Clone, Debug)]
pub struct GridContext<R: Real> {
    dim: usize,
    spacing: R,
    alpha: Vec<R>,
    node: Vec<i64>,
    h0: R,
    window_radius: R,
    kernel_radius: R,
}

impl<R: Real> GridContext<R> {
    pub fn new(
        dim: usize,
        spacing: R,
        alpha: Vec<R>,
        node: Vec<i64>,
        h0: R,
        window_radius: R,
        kernel_radius: R,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameters(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if alpha.len() != dim || node.len() != dim {
            return Err(Error::InvalidParameters(format!(
                "offset/node length must match dimension {dim}"
            )));
        }
        if !(spacing > R::zero() && spacing < h0 && h0 <= R::one()) {
            return Err(Error::InvalidParameters(format!(
                "spacings must satisfy 0 < h < h0 <= 1, got h {spacing:?}, h0 {h0:?}"
            )));
        }
        let half = real::<R>(0.5);
        if alpha.iter().any(|&a| a.abs() > half || !a.is_finite()) {
            return Err(Error::OutOfRange {
                alpha: alpha
                    .iter()
                    .map(|a| a.to_f64().unwrap_or(f64::NAN))
                    .collect(),
            });
        }
        let sqrt_n = real_dim_sqrt::<R>(dim);
        if !(window_radius > R::zero()
            && window_radius + real::<R>(1.5) * h0 * sqrt_n < kernel_radius)
        {
            return Err(Error::InvalidParameters(format!(
                "window/kernel radii must satisfy 0 < L + (3/2) h0 sqrt(n) < L', \
                 got L {window_radius:?}, L' {kernel_radius:?}"
            )));
        }
        Ok(GridContext {
            dim,
            spacing,
            alpha,
            node,
            h0,
            window_radius,
            kernel_radius,
        })
    }

    /// Build a context for a singularity at `x0`, splitting it into the
    /// nearest grid node and an offset.
    pub fn for_singularity(
        x0: &[R],
        spacing: R,
        h0: R,
        window_radius: R,
        kernel_radius: R,
    ) -> Result<Self> {
        let (node, alpha) = split_singularity(x0, spacing)?;
        GridContext::new(
            x0.len(),
            spacing,
            alpha,
            node,
            h0,
            window_radius,
            kernel_radius,
        )
    }

    /// Same geometry at a different spacing (must still satisfy `h < h0`).
    pub fn with_spacing(&self, spacing: R) -> Result<Self> {
        GridContext::new(
            self.dim,
            spacing,
            self.alpha.clone(),
            self.node.clone(),
            self.h0,
            self.window_radius,
            self.kernel_radius,
        )
    }

    /// Checks that every stencil point fits in the synthesis window:
    /// `L >= (4/3) h0 max_i |c_i|`.
    pub fn validate_stencil_radius(&self, max_point_norm: R) -> Result<()> {
        let needed = real::<R>(4.0 / 3.0) * self.h0 * max_point_norm;
        if self.window_radius < needed {
            return Err(Error::InvalidParameters(format!(
                "window radius {:?} too small for stencil: needs L >= (4/3) h0 max|c| = {:?}",
                self.window_radius, needed
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> R {
        self.spacing
    }

    pub fn alpha(&self) -> &[R] {
        &self.alpha
    }

    pub fn node(&self) -> &[i64] {
        &self.node
    }

    pub fn h0(&self) -> R {
        self.h0
    }

    pub fn window_radius(&self) -> R {
        self.window_radius
    }

    pub fn kernel_radius(&self) -> R {
        self.kernel_radius
    }

    /// The singularity location `h (m + alpha)`.
    pub fn singularity(&self) -> Vec<R> {
        self.node
            .iter()
            .zip(&self.alpha)
            .map(|(&m, &a)| self.spacing * (R::from_i64(m).unwrap() + a))
            .collect()
    }
}

#[inline]
fn real_dim_sqrt<R: Real>(dim: usize) -> R {
    real::<R>((dim as f64).sqrt())
}

/// Splits `x0 = h (m + alpha)` with `|alpha|_inf <= 1/2`.
///
/// A tie at `alpha_i = +-1/2` is resolved to `+1/2`, so the split is
/// deterministic.
pub fn split_singularity<R: Real>(x0: &[R], spacing: R) -> Result<(Vec<i64>, Vec<R>)> {
    if !(spacing > R::zero() && spacing.is_finite()) {
        return Err(Error::InvalidParameters(format!(
            "spacing must be positive and finite, got {spacing:?}"
        )));
    }
    let half = real::<R>(0.5);
    let mut node = Vec::with_capacity(x0.len());
    let mut alpha = Vec::with_capacity(x0.len());
    for &c in x0 {
        let t = c / spacing;
        // ceil(t - 1/2) picks alpha = +1/2 on ties.
        let mut m = (t - half).ceil();
        let mut a = t - m;
        // Guard against roundoff in the ceil pushing alpha out of range.
        if a > half {
            m = m + R::one();
            a = t - m;
        } else if a < -half {
            m = m - R::one();
            a = t - m;
        }
        node.push(m.to_i64().ok_or_else(|| {
            Error::InvalidParameters(format!("node index {m:?} does not fit in i64"))
        })?);
        alpha.push(a);
    }
    Ok((node, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_nearest_node() {
        let (m, a) = split_singularity(&[0.26f64], 0.1).unwrap();
        assert_eq!(m, vec![3]);
        assert!((a[0] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn split_at_origin() {
        let (m, a) = split_singularity(&[0.0f64, 0.0], 0.1).unwrap();
        assert_eq!(m, vec![0, 0]);
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn split_tie_goes_to_plus_half() {
        let (m, a) = split_singularity(&[0.25f64], 0.1).unwrap();
        assert_eq!(m, vec![2]);
        assert!((a[0] - 0.5).abs() < 1e-12);
        let (m, a) = split_singularity(&[-0.25f64], 0.1).unwrap();
        assert_eq!(m, vec![-3]);
        assert!((a[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn context_rejects_bad_window() {
        // L + (3/2) h0 sqrt(n) must stay below L'.
        let err = GridContext::new(2, 0.05f64, vec![0.0; 2], vec![0; 2], 0.1, 2.0, 2.1);
        assert!(err.is_err());
        let ok = GridContext::new(2, 0.05f64, vec![0.0; 2], vec![0; 2], 0.1, 2.0, 3.0);
        assert!(ok.is_ok());
    }

    #[test]
    fn context_rejects_offset_out_of_range() {
        let err = GridContext::new(1, 0.05f64, vec![0.6], vec![0], 0.1, 2.0, 3.0);
        assert!(matches!(err, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn context_rejects_bad_spacing() {
        assert!(GridContext::new(1, 0.2f64, vec![0.0], vec![0], 0.1, 2.0, 3.0).is_err());
        assert!(GridContext::new(1, 0.05f64, vec![0.0], vec![0], 1.5, 2.0, 4.0).is_err());
    }

    #[test]
    fn stencil_window_check() {
        let g = GridContext::new(2, 0.05f64, vec![0.0; 2], vec![0; 2], 0.1, 2.0, 3.0).unwrap();
        assert!(g.validate_stencil_radius(2.0).is_ok());
        assert!(g.validate_stencil_radius(100.0).is_err());
    }

    proptest! {
        #[test]
        fn split_roundtrip(x in -10.0f64..10.0, h in 1e-3f64..1.0) {
            let (m, a) = split_singularity(&[x], h).unwrap();
            prop_assert!(a[0].abs() <= 0.5 + 1e-15);
            let rebuilt = h * (m[0] as f64 + a[0]);
            prop_assert!((rebuilt - x).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }
}

//! Scalar abstraction: all numerics are generic over an IEEE float type.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
///
/// The convergence targets in the test suite assume `f64`; `f32` builds are
/// supported for callers that can live with the reduced accuracy.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for pulling `f64` literals into the generic scalar type.
#[inline]
pub(crate) fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// `usize` into the scalar type.
#[inline]
pub(crate) fn real_usize<R: Real>(x: usize) -> R {
    R::from_usize(x).expect("usize must convert into the scalar type")
}

/// Euclidean norm of a point.
#[inline]
pub fn norm2<R: Real>(x: &[R]) -> R {
    x.iter()
        .map(|&c| c * c)
        .fold(R::zero(), |a, b| a + b)
        .sqrt()
}

/// Max norm of a point.
#[inline]
pub fn norm_inf<R: Real>(x: &[R]) -> R {
    x.iter().fold(R::zero(), |a, &c| a.max(c.abs()))
}

/// Neumaier-compensated accumulator. Lattice sums run into the millions of
/// terms and the convergence studies resolve errors near 1e-12, where a naive
/// accumulation visibly pollutes the observed orders.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<R: Real> {
    sum: R,
    compensation: R,
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: R::zero(),
            compensation: R::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> R {
        self.sum + self.compensation
    }
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive_on_ill_conditioned_input() {
        // 1 + 1e-16 added 1e6 times: naive f64 accumulation drops the tail.
        let mut c = CompensatedSum::<f64>::new();
        let mut naive = 0.0f64;
        for _ in 0..1_000_000 {
            c.add(1.0);
            c.add(1e-16);
            naive += 1.0;
            naive += 1e-16;
        }
        let exact = 1_000_000.0 + 1e-10;
        assert!((c.value() - exact).abs() <= 1e-9);
        // The naive sum loses the small terms entirely.
        assert!((naive - exact).abs() > (c.value() - exact).abs());
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        assert_eq!(norm_inf(&[-3.0f64, 2.0]), 3.0);
    }
}

//! Singular kernels `s(x) = |x|^gamma l(|x|, x/|x|)` and smooth factors.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{norm2, real, real_usize, Real};

/// Function of a direction on the unit sphere.
pub type DirectionFn<R> = Arc<dyn Fn(&[R]) -> R + Send + Sync>;
/// Function of a radius and a direction.
pub type RadialDirectionFn<R> = Arc<dyn Fn(R, &[R]) -> R + Send + Sync>;
/// Function of a point.
pub type PointFn<R> = Arc<dyn Fn(&[R]) -> R + Send + Sync>;

/// Kernel with an integrable point singularity at the origin:
/// `s(x) = |x|^gamma l(|x|, x/|x|)` with `gamma > -n`.
///
/// An r-independent kernel carries only the angular profile `l0`. Kernels
/// whose modulation depends on the radius additionally carry the full `l`
/// and the leading terms `phi_k` of its expansion at `r = 0`, which the
/// composite rule consumes term by term.
#[derive(Clone)]
pub struct SingularKernel<R: Real> {
    dim: usize,
    gamma: R,
    kernel_id: String,
    angular: DirectionFn<R>,
    radial_expansion: Option<Vec<DirectionFn<R>>>,
    full: Option<RadialDirectionFn<R>>,
}

impl<R: Real> SingularKernel<R> {
    /// Kernel `|x|^gamma l0(x/|x|)` with no radial dependence.
    pub fn r_independent(
        dim: usize,
        gamma: R,
        kernel_id: impl Into<String>,
        angular: DirectionFn<R>,
    ) -> Result<Self> {
        check_exponent(dim, gamma)?;
        Ok(SingularKernel {
            dim,
            gamma,
            kernel_id: kernel_id.into(),
            angular,
            radial_expansion: None,
            full: None,
        })
    }

    /// Kernel with full radial dependence and explicit expansion terms
    /// `l(r, u) = phi_0(u) + r phi_1(u) + ...`. The first term doubles as
    /// the angular profile.
    pub fn with_expansion(
        dim: usize,
        gamma: R,
        kernel_id: impl Into<String>,
        full: RadialDirectionFn<R>,
        radial_expansion: Vec<DirectionFn<R>>,
    ) -> Result<Self> {
        check_exponent(dim, gamma)?;
        if radial_expansion.is_empty() {
            return Err(Error::InvalidParameters(
                "radial expansion needs at least the constant term".into(),
            ));
        }
        Ok(SingularKernel {
            dim,
            gamma,
            kernel_id: kernel_id.into(),
            angular: radial_expansion[0].clone(),
            radial_expansion: Some(radial_expansion),
            full: Some(full),
        })
    }

    /// Fallback for kernels without explicit expansion terms: builds
    /// `phi_k(u) = (1/k!) d^k/dr^k l(0, u)` for `k <= order` by central
    /// finite differences with the given step. Lower accuracy than explicit
    /// terms; the kernel id is tagged accordingly.
    pub fn with_numeric_expansion(
        dim: usize,
        gamma: R,
        kernel_id: impl Into<String>,
        full: RadialDirectionFn<R>,
        order: usize,
        step: R,
    ) -> Result<Self> {
        if order > 4 {
            return Err(Error::InvalidParameters(
                "numeric radial expansion supports orders up to 4".into(),
            ));
        }
        if !(step > R::zero()) {
            return Err(Error::InvalidParameters(
                "finite-difference step must be positive".into(),
            ));
        }
        let mut terms: Vec<DirectionFn<R>> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let f = full.clone();
            let term = move |u: &[R]| -> R {
                let at = |j: i32| f(step * R::from_i32(j).unwrap(), u);
                let two = real::<R>(2.0);
                let d = match k {
                    0 => at(0),
                    1 => (at(1) - at(-1)) / (two * step),
                    2 => (at(1) - two * at(0) + at(-1)) / (step * step),
                    3 => (at(2) - two * at(1) + two * at(-1) - at(-2)) / (two * step * step * step),
                    _ => {
                        (at(2) - real::<R>(4.0) * at(1) + real::<R>(6.0) * at(0)
                            - real::<R>(4.0) * at(-1)
                            + at(-2))
                            / (step * step * step * step)
                    }
                };
                d / real_usize::<R>((1..=k).product::<usize>().max(1))
            };
            terms.push(Arc::new(term));
        }
        let id = format!("{}+fd", kernel_id.into());
        Self::with_expansion(dim, gamma, id, full, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> R {
        self.gamma
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    /// True when the kernel has no radial dependence.
    pub fn is_r_independent(&self) -> bool {
        self.full.is_none()
    }

    /// Number of available expansion terms (1 for r-independent kernels).
    pub fn expansion_len(&self) -> usize {
        self.radial_expansion.as_ref().map_or(1, Vec::len)
    }

    /// Angular profile `l0(u)` (equivalently `phi_0`).
    pub fn angular_at(&self, u: &[R]) -> R {
        (self.angular)(u)
    }

    /// Modulation `l(r, u)`; falls back to `l0(u)` for r-independent kernels.
    pub fn modulation_at(&self, r: R, u: &[R]) -> R {
        match &self.full {
            Some(f) => f(r, u),
            None => (self.angular)(u),
        }
    }

    /// `s0(y) = |y|^gamma l0(y/|y|)`. At `y = 0` the value is non-finite,
    /// which the lattice rules surface as an evaluation failure if a caller
    /// ever lands there.
    pub fn eval_r_independent(&self, y: &[R]) -> R {
        let r = norm2(y);
        let mut u = [R::zero(); 3];
        for (ui, &yi) in u.iter_mut().zip(y) {
            *ui = yi / r;
        }
        r.powf(self.gamma) * (self.angular)(&u[..y.len()])
    }

    /// `s(y) = |y|^gamma l(|y|, y/|y|)`.
    pub fn eval(&self, y: &[R]) -> R {
        let r = norm2(y);
        let mut u = [R::zero(); 3];
        for (ui, &yi) in u.iter_mut().zip(y) {
            *ui = yi / r;
        }
        r.powf(self.gamma) * self.modulation_at(r, &u[..y.len()])
    }

    /// The r-independent kernel `|y|^{gamma+k} phi_k(y/|y|)` for the k-th
    /// expansion term. For a kernel declared without radial dependence the
    /// higher terms are identically zero.
    pub fn expansion_term(&self, k: usize) -> Result<SingularKernel<R>> {
        let terms = match &self.radial_expansion {
            Some(t) => t,
            None if k == 0 => {
                return Ok(self.clone());
            }
            None => {
                return SingularKernel::r_independent(
                    self.dim,
                    self.gamma + real_usize::<R>(k),
                    format!("{}#phi{}", self.kernel_id, k),
                    Arc::new(|_: &[R]| R::zero()),
                );
            }
        };
        let phi = terms.get(k).ok_or(Error::InsufficientExpansion {
            have: terms.len(),
            need: k + 1,
        })?;
        SingularKernel::r_independent(
            self.dim,
            self.gamma + real_usize::<R>(k),
            format!("{}#phi{}", self.kernel_id, k),
            phi.clone(),
        )
    }
}

impl<R: Real> std::fmt::Debug for SingularKernel<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularKernel")
            .field("dim", &self.dim)
            .field("gamma", &self.gamma)
            .field("kernel_id", &self.kernel_id)
            .field("r_independent", &self.is_r_independent())
            .finish()
    }
}

fn check_exponent<R: Real>(dim: usize, gamma: R) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameters(format!(
            "dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    if !(gamma > -real_usize::<R>(dim)) {
        return Err(Error::InvalidParameters(format!(
            "singularity exponent must satisfy gamma > -n for integrability, got {gamma:?}"
        )));
    }
    Ok(())
}

/// Smooth compactly supported factor `v`, vanishing outside the ball of
/// `support_radius` around the origin.
#[derive(Clone)]
pub struct SmoothFactor<R: Real> {
    dim: usize,
    support_radius: R,
    factor_id: String,
    value: PointFn<R>,
}

impl<R: Real> SmoothFactor<R> {
    /// The constructor spot-checks the support contract at a handful of
    /// points on and outside the stated radius.
    pub fn new(
        dim: usize,
        support_radius: R,
        factor_id: impl Into<String>,
        value: PointFn<R>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameters(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(support_radius > R::zero() && support_radius.is_finite()) {
            return Err(Error::InvalidParameters(
                "support radius must be positive and finite".into(),
            ));
        }
        let factor = SmoothFactor {
            dim,
            support_radius,
            factor_id: factor_id.into(),
            value,
        };
        for &scale in &[1.0, 1.0 + 1e-9, 1.25, 2.0] {
            let r = support_radius * real::<R>(scale);
            for axis in 0..dim {
                let mut x = vec![R::zero(); dim];
                x[axis] = r;
                if factor.eval(&x) != R::zero() {
                    return Err(Error::InvalidParameters(format!(
                        "factor '{}' is nonzero at |x| = {:?} >= support radius {:?}",
                        factor.factor_id, r, support_radius
                    )));
                }
                x[axis] = -r;
                if factor.eval(&x) != R::zero() {
                    return Err(Error::InvalidParameters(format!(
                        "factor '{}' is nonzero at |x| = {:?} >= support radius {:?}",
                        factor.factor_id, r, support_radius
                    )));
                }
            }
            // one diagonal sample
            let mut x = vec![r / real::<R>((dim as f64).sqrt()); dim];
            x[0] = x[0].abs();
            if factor.eval(&x) != R::zero() {
                return Err(Error::InvalidParameters(format!(
                    "factor '{}' is nonzero outside its support ball",
                    factor.factor_id
                )));
            }
        }
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> R {
        self.support_radius
    }

    pub fn factor_id(&self) -> &str {
        &self.factor_id
    }

    pub fn eval(&self, x: &[R]) -> R {
        (self.value)(x)
    }

    /// The identically zero factor.
    pub fn zero(dim: usize, support_radius: R) -> Self {
        SmoothFactor {
            dim,
            support_radius,
            factor_id: "zero".into(),
            value: Arc::new(|_: &[R]| R::zero()),
        }
    }
}

impl<R: Real> std::fmt::Debug for SmoothFactor<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFactor")
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .field("factor_id", &self.factor_id)
            .finish()
    }
}

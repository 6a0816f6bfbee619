//! The corrected trapezoidal rule and its composite generalization.
//!
//! Both rules work in the frame of the grid node nearest the singularity:
//! with `x0 = h (m + alpha)`, lattice evaluation happens at `y = x - h m`,
//! the puncture sits at `y = 0`, and the correction samples the smooth
//! factor at the translated stencil nodes `h (m + c_i)`.

use std::collections::HashMap;

use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::grid::GridContext;
use crate::kernel::{SingularKernel, SmoothFactor};
use crate::lattice::punctured_trapezoid;
use crate::real::{norm2, real, real_usize, Real};
use crate::weights::{solve_weights, synthesis_template, SynthesisParams, WeightSet};

fn check_compat<R: Real>(
    kernel: &SingularKernel<R>,
    grid: &GridContext<R>,
    weights: &WeightSet<R>,
) -> Result<()> {
    let tol = real::<R>(1e-10);
    if weights.stencil.dim() != grid.dim() {
        return Err(Error::IncompatibleWeights(format!(
            "weights are for dimension {}, grid is {}",
            weights.stencil.dim(),
            grid.dim()
        )));
    }
    if (weights.gamma - kernel.gamma()).abs() > tol {
        return Err(Error::IncompatibleWeights(format!(
            "weights were synthesized for gamma {:?}, kernel has {:?}",
            weights.gamma,
            kernel.gamma()
        )));
    }
    if weights.kernel_id != kernel.kernel_id() {
        return Err(Error::IncompatibleWeights(format!(
            "weights were synthesized for kernel '{}', got '{}'",
            weights.kernel_id,
            kernel.kernel_id()
        )));
    }
    for (&wa, &ga) in weights.alpha.iter().zip(grid.alpha()) {
        if (wa - ga).abs() > tol {
            return Err(Error::IncompatibleWeights(format!(
                "weights are for offset {:?}, grid has {:?}",
                weights.alpha,
                grid.alpha()
            )));
        }
    }
    grid.validate_stencil_radius(real::<R>(weights.stencil.max_radius()))?;
    Ok(())
}

/// The corrected trapezoidal rule for an r-independent kernel:
/// punctured lattice sum of `s0(x - x0) v(x)` plus
/// `h^{gamma+n} sum_i omega_i v(h (m + c_i))`.
pub fn corrected_rule<R: Real>(
    kernel: &SingularKernel<R>,
    v: &SmoothFactor<R>,
    grid: &GridContext<R>,
    weights: &WeightSet<R>,
) -> Result<R> {
    if !kernel.is_r_independent() {
        return Err(Error::InvalidParameters(
            "corrected_rule expects an r-independent kernel; use composite_rule instead".into(),
        ));
    }
    if kernel.dim() != grid.dim() || v.dim() != grid.dim() {
        return Err(Error::InvalidParameters(
            "dimension mismatch in corrected rule".into(),
        ));
    }
    check_compat(kernel, grid, weights)?;

    let n = grid.dim();
    let h = grid.spacing();
    let alpha = grid.alpha();
    let node = grid.node();
    let shift: Vec<R> = alpha.iter().map(|&a| h * a).collect();
    let translation: Vec<R> = node.iter().map(|&m| h * R::from_i64(m).unwrap()).collect();

    let integrand = |y: &[R]| {
        let mut rel = [R::zero(); 3];
        let mut x = [R::zero(); 3];
        for d in 0..n {
            rel[d] = y[d] - shift[d];
            x[d] = y[d] + translation[d];
        }
        kernel.eval_r_independent(&rel[..n]) * v.eval(&x[..n])
    };
    let node_norm = norm2(&translation);
    let lattice = punctured_trapezoid(integrand, v.support_radius() + node_norm, grid)?;

    let mut correction = R::zero();
    let mut x = vec![R::zero(); n];
    for (w, c) in weights.omega.iter().zip(weights.stencil.points()) {
        for d in 0..n {
            x[d] = h * (R::from_i64(node[d] + c[d]).unwrap());
        }
        correction = correction + *w * v.eval(&x);
    }
    Ok(lattice + h.powf(kernel.gamma() + real_usize::<R>(n)) * correction)
}

/// Supplies correction weights for the expansion terms the composite rule
/// generates. Implementations may synthesize, memoize, interpolate from a
/// table, or load from files.
pub trait WeightProvider<R: Real> {
    fn weights_for(
        &mut self,
        term_kernel: &SingularKernel<R>,
        order: u32,
        grid: &GridContext<R>,
    ) -> Result<WeightSet<R>>;
}

impl<R: Real, F> WeightProvider<R> for F
where
    F: FnMut(&SingularKernel<R>, u32, &GridContext<R>) -> Result<WeightSet<R>>,
{
    fn weights_for(
        &mut self,
        term_kernel: &SingularKernel<R>,
        order: u32,
        grid: &GridContext<R>,
    ) -> Result<WeightSet<R>> {
        self(term_kernel, order, grid)
    }
}

/// Weight provider that runs the synthesis on demand and memoizes the
/// results, so sweeps over `h` at a fixed offset reuse each term's weights.
pub struct SynthesizingProvider<R: Real> {
    cutoff: RadialCutoff<R>,
    params: SynthesisParams<R>,
    cache: HashMap<CacheKey, WeightSet<R>>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    kernel_id: String,
    gamma_bits: u64,
    order: u32,
    alpha_bits: Vec<u64>,
}

impl<R: Real> SynthesizingProvider<R> {
    pub fn new(cutoff: RadialCutoff<R>, params: SynthesisParams<R>) -> Self {
        SynthesizingProvider {
            cutoff,
            params,
            cache: HashMap::new(),
        }
    }

    pub fn params(&self) -> &SynthesisParams<R> {
        &self.params
    }
}

impl<R: Real> WeightProvider<R> for SynthesizingProvider<R> {
    fn weights_for(
        &mut self,
        term_kernel: &SingularKernel<R>,
        order: u32,
        grid: &GridContext<R>,
    ) -> Result<WeightSet<R>> {
        let key = CacheKey {
            kernel_id: term_kernel.kernel_id().to_owned(),
            gamma_bits: term_kernel.gamma().to_f64().unwrap_or(f64::NAN).to_bits(),
            order,
            alpha_bits: grid
                .alpha()
                .iter()
                .map(|a| a.to_f64().unwrap_or(f64::NAN).to_bits())
                .collect(),
        };
        if let Some(ws) = self.cache.get(&key) {
            return Ok(ws.clone());
        }
        let stencil = crate::weights::Stencil::default_stencil(order, grid.dim());
        let template = synthesis_template(grid.dim(), &stencil, &self.params)?;
        let ws = solve_weights(
            term_kernel,
            &stencil,
            grid.alpha(),
            &template,
            &self.cutoff,
            &self.params,
        )?;
        self.cache.insert(key, ws.clone());
        Ok(ws)
    }
}

/// The composite corrected rule for kernels whose modulation depends on the
/// radius: corrected rules of decreasing order applied to the expansion
/// terms, plus a punctured-rule pass over the expansion remainder.
pub fn composite_rule<R: Real>(
    kernel: &SingularKernel<R>,
    v: &SmoothFactor<R>,
    grid: &GridContext<R>,
    provider: &mut dyn WeightProvider<R>,
    order: u32,
) -> Result<R> {
    let n = grid.dim();
    if kernel.dim() != n || v.dim() != n {
        return Err(Error::InvalidParameters(
            "dimension mismatch in composite rule".into(),
        ));
    }
    let p = order as usize;
    if !kernel.is_r_independent() && kernel.expansion_len() < p + 1 {
        return Err(Error::InsufficientExpansion {
            have: kernel.expansion_len(),
            need: p + 1,
        });
    }

    let mut total = R::zero();
    let mut terms = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let term_kernel = kernel.expansion_term(k)?;
        let ws = provider.weights_for(&term_kernel, (p - k) as u32, grid)?;
        total = total + corrected_rule(&term_kernel, v, grid, &ws)?;
        terms.push(term_kernel);
    }

    // One lattice pass for the remainder: the full modulation minus the
    // expansion terms, evaluated together per node.
    let h = grid.spacing();
    let shift: Vec<R> = grid.alpha().iter().map(|&a| h * a).collect();
    let translation: Vec<R> = grid
        .node()
        .iter()
        .map(|&m| h * R::from_i64(m).unwrap())
        .collect();
    let gamma = kernel.gamma();
    let remainder = |y: &[R]| {
        let mut rel = [R::zero(); 3];
        let mut x = [R::zero(); 3];
        for d in 0..n {
            rel[d] = y[d] - shift[d];
            x[d] = y[d] + translation[d];
        }
        let rel = &rel[..n];
        let r = norm2(rel);
        let mut u = [R::zero(); 3];
        for d in 0..n {
            u[d] = rel[d] / r;
        }
        let u = &u[..n];
        let mut modulation = kernel.modulation_at(r, u);
        let mut rk = R::one();
        for term in &terms {
            modulation = modulation - rk * term.angular_at(u);
            rk = rk * r;
        }
        r.powf(gamma) * modulation * v.eval(&x[..n])
    };
    let lattice = punctured_trapezoid(remainder, v.support_radius() + norm2(&translation), grid)?;
    Ok(total + lattice)
}

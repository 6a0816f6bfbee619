//! Exact-polar evaluation of the singular moment integrals
//! `int |x|^gamma l0(x/|x|) x^beta psi(x/L) dx`.
//!
//! Because the cutoff is radial the integral factors exactly into a radial
//! part, whose singular piece is handled analytically on the plateau, and an
//! angular part over the unit sphere.

use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::gauss::gauss_legendre;
use crate::kernel::SingularKernel;
use crate::multi_index::MultiIndex;
use crate::real::{real, real_usize, CompensatedSum, Real};

/// Quadrature rule on the unit sphere `S^{n-1}`.
///
/// Weights sum to the sphere's surface measure: 2 for n = 1, 2 pi for n = 2,
/// 4 pi for n = 3.
#[derive(Clone, Debug)]
pub struct AngularRule<R: Real> {
    dim: usize,
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> AngularRule<R> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[R] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn weight(&self, j: usize) -> R {
        self.weights[j]
    }

    /// `sum_j w_j f(u_j)`.
    pub fn integrate<F: Fn(&[R]) -> R>(&self, f: F) -> R {
        let mut acc = CompensatedSum::new();
        for j in 0..self.len() {
            acc.add(self.weights[j] * f(self.node(j)));
        }
        acc.value()
    }
}

/// Builds the sphere rule for dimension `n`.
///
/// * n = 1: the two-point set `{-1, +1}` with unit weights (exact);
/// * n = 2: `resolution` equispaced angles with uniform weights, spectrally
///   accurate for smooth periodic integrands;
/// * n = 3: Gauss-Legendre in the polar cosine (`resolution` nodes) times
///   `2 resolution` equispaced azimuths.
pub fn angular_rule<R: Real>(n: usize, resolution: usize) -> Result<AngularRule<R>> {
    match n {
        1 => Ok(AngularRule {
            dim: 1,
            nodes: vec![-R::one(), R::one()],
            weights: vec![R::one(), R::one()],
        }),
        2 => {
            if resolution == 0 {
                return Err(Error::InvalidParameters(
                    "angular resolution must be positive".into(),
                ));
            }
            let mut nodes = Vec::with_capacity(2 * resolution);
            let w = real::<R>(2.0) * R::PI() / real_usize::<R>(resolution);
            for j in 0..resolution {
                let theta =
                    real::<R>(2.0) * R::PI() * real_usize::<R>(j) / real_usize::<R>(resolution);
                nodes.push(theta.cos());
                nodes.push(theta.sin());
            }
            Ok(AngularRule {
                dim: 2,
                nodes,
                weights: vec![w; resolution],
            })
        }
        3 => {
            if resolution == 0 {
                return Err(Error::InvalidParameters(
                    "angular resolution must be positive".into(),
                ));
            }
            let (polar_nodes, polar_weights) = gauss_legendre::<R>(resolution);
            let azimuths = 2 * resolution;
            let w_phi = real::<R>(2.0) * R::PI() / real_usize::<R>(azimuths);
            let mut nodes = Vec::with_capacity(3 * resolution * azimuths);
            let mut weights = Vec::with_capacity(resolution * azimuths);
            for (t, wt) in polar_nodes.iter().zip(&polar_weights) {
                let sin_theta = (R::one() - *t * *t).max(R::zero()).sqrt();
                for j in 0..azimuths {
                    let phi =
                        real::<R>(2.0) * R::PI() * real_usize::<R>(j) / real_usize::<R>(azimuths);
                    nodes.push(sin_theta * phi.cos());
                    nodes.push(sin_theta * phi.sin());
                    nodes.push(*t);
                    weights.push(*wt * w_phi);
                }
            }
            Ok(AngularRule {
                dim: 3,
                nodes,
                weights,
            })
        }
        _ => Err(Error::InvalidParameters(format!(
            "angular rules are defined for n in {{1, 2, 3}}, got {n}"
        ))),
    }
}

/// Default angular resolution used by weight synthesis.
pub fn default_angular_resolution(n: usize) -> usize {
    match n {
        2 => 64,
        3 => 24,
        _ => 1,
    }
}

/// Default number of Gauss-Legendre points on the cutoff transition.
pub const DEFAULT_GLUE_POINTS: usize = 40;

/// Radial factor `int_0^inf r^e profile(r/L) dr` for `e > -1`:
/// the plateau `[0, aL]` contributes `(aL)^{e+1} / (e+1)` exactly, and the
/// smooth transition `[aL, bL]` is integrated with `glue_points`
/// Gauss-Legendre nodes.
pub fn radial_moment<R: Real>(
    gamma_eff: R,
    cutoff: &RadialCutoff<R>,
    window_radius: R,
    glue_points: usize,
) -> Result<R> {
    if !(gamma_eff > -R::one()) {
        return Err(Error::NonIntegrableMoment {
            exponent: gamma_eff.to_f64().unwrap_or(f64::NAN),
        });
    }
    if !(window_radius > R::zero()) {
        return Err(Error::InvalidParameters(
            "window radius must be positive".into(),
        ));
    }
    if glue_points == 0 {
        return Err(Error::InvalidParameters(
            "glue point count must be positive".into(),
        ));
    }
    let a = cutoff.plateau_radius() * window_radius;
    let b = cutoff.support_radius() * window_radius;
    let plateau = a.powf(gamma_eff + R::one()) / (gamma_eff + R::one());

    let (nodes, weights) = gauss_legendre::<R>(glue_points);
    let half = real::<R>(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    let mut acc = CompensatedSum::new();
    for (x, w) in nodes.iter().zip(&weights) {
        let r = mid + rad * *x;
        acc.add(*w * r.powf(gamma_eff) * cutoff.eval_radial(r / window_radius));
    }
    Ok(plateau + rad * acc.value())
}

/// Moment integral `int s0(x) x^beta psi(x/L) dx` for an r-independent
/// kernel: radial factor times `sum_j w_j l0(u_j) u_j^beta`.
pub fn moment_integral<R: Real>(
    kernel: &SingularKernel<R>,
    beta: &MultiIndex,
    cutoff: &RadialCutoff<R>,
    window_radius: R,
    angular: &AngularRule<R>,
    glue_points: usize,
) -> Result<R> {
    let n = kernel.dim();
    if beta.dim() != n || angular.dim() != n {
        return Err(Error::InvalidParameters(format!(
            "moment integral dimension mismatch: kernel {n}, beta {}, angular {}",
            beta.dim(),
            angular.dim()
        )));
    }
    if !kernel.is_r_independent() {
        return Err(Error::InvalidParameters(
            "moment integrals are defined for r-independent kernels".into(),
        ));
    }
    let exponent =
        kernel.gamma() + real_usize::<R>(beta.order() as usize) + real_usize::<R>(n) - R::one();
    let radial = radial_moment(exponent, cutoff, window_radius, glue_points)?;
    let ang = angular.integrate(|u| kernel.angular_at(u) * beta.pow(u));
    Ok(radial * ang)
}

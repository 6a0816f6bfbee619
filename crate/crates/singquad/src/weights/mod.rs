//! Correction-weight synthesis.
//!
//! The corrected rules add `h^{gamma+n} sum_i omega_i v(h c_i)` over a small
//! stencil close to the singularity. The weights are fixed by requiring the
//! rule to integrate windowed monomials exactly, which yields a small linear
//! system per spacing; the weights are then extrapolated to the zero-spacing
//! limit over a ladder of decreasing `h`.

mod file;
mod table;

pub use file::{
    read_weight_set, read_weight_table, weight_set_to_json, weight_table_to_json, write_weight_set,
    write_weight_table,
};
pub use table::{interpolate_weights, tabulate_weights, TableEntry, WeightTable};

use std::collections::BTreeMap;

use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::grid::GridContext;
use crate::kernel::SingularKernel;
use crate::lattice::punctured_trapezoid;
use crate::linalg::{residual_inf, LuSolver};
use crate::moments::{
    angular_rule, default_angular_resolution, moment_integral, AngularRule, DEFAULT_GLUE_POINTS,
};
use crate::multi_index::{enumerate_multi_indices, pi_count, MultiIndex};
use crate::real::{norm2, real, real_usize, Real};

/// Correction node set `D = {c_i} in Z^n` with `pi(p)` points including the
/// origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    dim: usize,
    order: u32,
    points: Vec<Vec<i64>>,
}

impl Stencil {
    pub fn new(dim: usize, order: u32, points: Vec<Vec<i64>>) -> Result<Self> {
        let expected = pi_count(order, dim);
        if points.len() != expected {
            return Err(Error::InvalidParameters(format!(
                "stencil for order {order} in dimension {dim} needs {expected} points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidParameters(
                "stencil points must match the dimension".into(),
            ));
        }
        if !points.iter().any(|c| c.iter().all(|&k| k == 0)) {
            return Err(Error::InvalidParameters(
                "stencil must contain the origin".into(),
            ));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameters(format!(
                        "stencil points must be pairwise distinct, found {:?} twice",
                        points[i]
                    )));
                }
            }
        }
        Ok(Stencil { dim, order, points })
    }

    /// The default stencil `{c in N_0^n : |c|_1 <= p}` in graded
    /// lexicographic order.
    pub fn default_stencil(order: u32, dim: usize) -> Stencil {
        let points = enumerate_multi_indices(order, dim)
            .into_iter()
            .map(|m| m.exponents().iter().map(|&e| i64::from(e)).collect())
            .collect();
        Stencil { dim, order, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    /// Largest Euclidean norm over the stencil points.
    pub fn max_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|c| c.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// One ladder level: the weights solved at spacing `h`.
///
/// `residual` and `rhs_norm` describe the linear solve at that level; they
/// are absent on weight sets loaded from files.
#[derive(Clone, Debug)]
pub struct LadderEntry<R: Real> {
    pub h: R,
    pub omega: Vec<R>,
    pub residual: Option<R>,
    pub rhs_norm: Option<R>,
}

/// How a weight set came to be.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Synthesized,
    Interpolated,
    File,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::Synthesized => "synthesized",
            Provenance::Interpolated => "interpolated",
            Provenance::File => "file",
        };
        f.write_str(s)
    }
}

/// Cutoff and quadrature settings a weight set was synthesized with.
#[derive(Clone, Debug)]
pub struct SynthesisMeta<R: Real> {
    pub cutoff_plateau: R,
    pub cutoff_support: R,
    pub profile_id: String,
    pub angular_resolution: usize,
    pub glue_points: usize,
}

/// Correction weights for one offset `alpha`, together with the synthesis
/// evidence: the full ladder, the final solve residual and the condition
/// number of the moment-matching matrix.
#[derive(Clone, Debug)]
pub struct WeightSet<R: Real> {
    pub stencil: Stencil,
    pub omega: Vec<R>,
    pub alpha: Vec<R>,
    pub gamma: R,
    pub kernel_id: String,
    pub kernel_params: BTreeMap<String, f64>,
    pub ladder: Vec<LadderEntry<R>>,
    pub residual_norm: R,
    pub condition_number: R,
    pub provenance: Provenance,
    /// Set when the offset lies within one table cell of the `|alpha_i| = 1/2`
    /// tie region, where weights may vary non-smoothly.
    pub near_tie: bool,
    pub synthesis: SynthesisMeta<R>,
}

impl<R: Real> WeightSet<R> {
    /// A copy of this weight set using the raw (unextrapolated) weights of
    /// ladder level `level` instead of the extrapolated limit.
    pub fn at_ladder_level(&self, level: usize) -> Option<WeightSet<R>> {
        let entry = self.ladder.get(level)?;
        let mut ws = self.clone();
        ws.omega = entry.omega.clone();
        Some(ws)
    }
}

/// Parameters of a weight synthesis.
#[derive(Clone, Debug)]
pub struct SynthesisParams<R: Real> {
    /// Strictly decreasing spacings to solve at.
    pub ladder: Vec<R>,
    /// Extrapolation is declared converged when successive extrapolants
    /// differ by less than this in the max norm.
    pub tol: R,
    pub angular_resolution: usize,
    pub glue_points: usize,
    /// Condition numbers above this are reported as a degenerate stencil.
    pub condition_limit: R,
}

impl<R: Real> SynthesisParams<R> {
    /// Halving ladder from `h_base = 1/16`: six levels in 1d, five in 2d,
    /// and four from `1/8` in 3d, where lattice sums grow like `(L/h)^n`.
    /// The extra levels keep the extrapolant-stability check, which lags the
    /// raw ladder by one level, below the default tolerance.
    pub fn default_for_dim(dim: usize) -> Self {
        let (h_base, levels) = match dim {
            1 => (0.0625, 6),
            3 => (0.125, 4),
            _ => (0.0625, 5),
        };
        SynthesisParams {
            ladder: (0..levels)
                .map(|j| real::<R>(h_base / f64::from(1 << j)))
                .collect(),
            tol: real(1e-6),
            angular_resolution: default_angular_resolution(dim),
            glue_points: DEFAULT_GLUE_POINTS,
            condition_limit: real(1e12),
        }
    }
}

/// Infinity-norm condition estimate of a row-major square matrix, as used
/// by the degeneracy check in [`solve_weights`]. Infinite for singular
/// matrices.
pub fn condition_estimate<R: Real>(matrix: &[R], size: usize) -> R {
    LuSolver::new(matrix, size).condition_inf(matrix)
}

/// The moment-matching matrix `K[j][i] = (c_i - alpha)^{nu_j}`.
///
/// Row order comes from `indices`, column order from the stencil. Returned
/// row-major, size `len x len`.
pub fn assemble_k<R: Real>(
    stencil: &Stencil,
    alpha: &[R],
    indices: &[MultiIndex],
) -> Result<Vec<R>> {
    let size = stencil.len();
    if indices.len() != size {
        return Err(Error::InvalidParameters(format!(
            "need as many multi-indices as stencil points: {} vs {size}",
            indices.len()
        )));
    }
    if alpha.len() != stencil.dim() {
        return Err(Error::InvalidParameters("offset dimension mismatch".into()));
    }
    let mut matrix = vec![R::zero(); size * size];
    let mut shifted = vec![R::zero(); stencil.dim()];
    for (col, point) in stencil.points().iter().enumerate() {
        for (d, (&c, &a)) in point.iter().zip(alpha).enumerate() {
            shifted[d] = R::from_i64(c).unwrap() - a;
        }
        for (row, nu) in indices.iter().enumerate() {
            matrix[row * size + col] = nu.pow(&shifted);
        }
    }
    Ok(matrix)
}

/// Normalized punctured-rule error on the windowed monomial `beta`:
/// `R_beta(h) = (I - T_h^0)[s0(.-h alpha) P_beta(.-h alpha)] / h^{gamma+n+|beta|}`
/// with `P_beta(y) = y^beta psi(y/L)`.
pub fn compute_r_beta<R: Real>(
    kernel: &SingularKernel<R>,
    beta: &MultiIndex,
    grid: &GridContext<R>,
    cutoff: &RadialCutoff<R>,
    angular: &AngularRule<R>,
    glue_points: usize,
) -> Result<R> {
    let n = grid.dim();
    if kernel.dim() != n || beta.dim() != n {
        return Err(Error::InvalidParameters(
            "dimension mismatch in R_beta".into(),
        ));
    }
    let window_radius = grid.window_radius();
    let exact = moment_integral(kernel, beta, cutoff, window_radius, angular, glue_points)?;

    let h = grid.spacing();
    let alpha = grid.alpha();
    let shift: Vec<R> = alpha.iter().map(|&a| h * a).collect();
    let integrand = |x: &[R]| {
        let mut rel = [R::zero(); 3];
        for d in 0..n {
            rel[d] = x[d] - shift[d];
        }
        let rel = &rel[..n];
        kernel.eval_r_independent(rel) * beta.pow(rel) * cutoff.eval_window(window_radius, rel)
    };
    // The integrand vanishes once |x - h alpha| reaches the window support.
    let support = cutoff.support_radius() * window_radius + h * norm2(alpha);
    let lattice = punctured_trapezoid(integrand, support, grid)?;

    let scale =
        h.powf(kernel.gamma() + real_usize::<R>(n) + real_usize::<R>(beta.order() as usize));
    Ok((exact - lattice) / scale)
}

/// Componentwise first-order Richardson extrapolation of the ladder to
/// `h = 0`: each adjacent pair `(h_j, h_{j+1})` yields the extrapolant
/// `(rho w(h_{j+1}) - w(h_j)) / (rho - 1)` with `rho = h_j / h_{j+1}`, and
/// the last one is returned.
///
/// Order 1 is the worst-case leading error over the system's rows; ladders
/// that converge faster than that are only helped by the single-stage form,
/// whereas deeper elimination stages would amplify coarse-level noise.
///
/// Also returns the max-norm difference between the last two extrapolants
/// (for a two-level ladder, between the extrapolant and the finest raw
/// weights; `None` for a single level).
pub fn extrapolate_ladder<R: Real>(ladder: &[LadderEntry<R>]) -> (Vec<R>, Option<R>) {
    assert!(!ladder.is_empty());
    let levels = ladder.len();
    if levels == 1 {
        return (ladder[0].omega.clone(), None);
    }
    let mut extrapolants: Vec<Vec<R>> = Vec::with_capacity(levels - 1);
    for pair in ladder.windows(2) {
        let rho = pair[0].h / pair[1].h;
        let omega = pair[0]
            .omega
            .iter()
            .zip(&pair[1].omega)
            .map(|(&coarse, &fine)| (rho * fine - coarse) / (rho - R::one()))
            .collect();
        extrapolants.push(omega);
    }
    let last = extrapolants.last().expect("at least one pair").clone();
    let previous = if extrapolants.len() >= 2 {
        &extrapolants[extrapolants.len() - 2]
    } else {
        &ladder[levels - 1].omega
    };
    let delta = last
        .iter()
        .zip(previous)
        .fold(R::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
    (last, Some(delta))
}

/// Solves the moment-matching system `K omega(h) = V(h)` at every ladder
/// level and extrapolates the weights to the zero-spacing limit.
///
/// `template` supplies the geometry (`h0`, `L`, `L'`); its spacing is
/// replaced by each ladder value in turn, and its offset by `alpha`.
pub fn solve_weights<R: Real>(
    kernel: &SingularKernel<R>,
    stencil: &Stencil,
    alpha: &[R],
    template: &GridContext<R>,
    cutoff: &RadialCutoff<R>,
    params: &SynthesisParams<R>,
) -> Result<WeightSet<R>> {
    let n = template.dim();
    if stencil.dim() != n || kernel.dim() != n || alpha.len() != n {
        return Err(Error::InvalidParameters(
            "dimension mismatch in weight synthesis".into(),
        ));
    }
    if !kernel.is_r_independent() {
        return Err(Error::InvalidParameters(
            "weights are synthesized for r-independent kernels; expand the kernel first".into(),
        ));
    }
    if params.ladder.len() < 2 {
        return Err(Error::InvalidParameters(
            "ladder needs at least two levels".into(),
        ));
    }
    if params.ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameters(
            "ladder spacings must be strictly decreasing".into(),
        ));
    }
    template.validate_stencil_radius(real::<R>(stencil.max_radius()))?;

    // The synthesis window must be flat across every shifted stencil node,
    // otherwise the assembled monomial values would see the cutoff.
    let plateau = cutoff.plateau_radius() * template.window_radius();
    for point in stencil.points() {
        let mut worst = R::zero();
        for (d, &c) in point.iter().enumerate() {
            let t = R::from_i64(c).unwrap() - alpha[d];
            worst = worst + t * t;
        }
        let dist = params.ladder[0] * worst.sqrt();
        if dist > plateau {
            return Err(Error::InvalidParameters(format!(
                "stencil node {point:?} leaves the cutoff plateau at the coarsest ladder level"
            )));
        }
    }

    let indices = enumerate_multi_indices(stencil.order(), n);
    let matrix = assemble_k(stencil, alpha, &indices)?;
    let size = stencil.len();
    let lu = LuSolver::new(&matrix, size);
    let condition = lu.condition_inf(&matrix);
    if lu.is_singular() || condition > params.condition_limit {
        return Err(Error::StencilDegenerate {
            condition: condition.to_f64().unwrap_or(f64::INFINITY),
            limit: params.condition_limit.to_f64().unwrap_or(f64::NAN),
        });
    }

    let angular = angular_rule::<R>(n, params.angular_resolution)?;
    let mut ladder = Vec::with_capacity(params.ladder.len());
    for &h in &params.ladder {
        let grid = GridContext::new(
            n,
            h,
            alpha.to_vec(),
            vec![0; n],
            template.h0(),
            template.window_radius(),
            template.kernel_radius(),
        )?;
        let mut rhs = vec![R::zero(); size];
        for (row, nu) in indices.iter().enumerate() {
            rhs[row] = compute_r_beta(kernel, nu, &grid, cutoff, &angular, params.glue_points)?;
        }
        let omega = lu.solve(&rhs);
        let residual = residual_inf(&matrix, size, &omega, &rhs);
        let rhs_norm = rhs.iter().fold(R::zero(), |a, &v| a.max(v.abs()));
        ladder.push(LadderEntry {
            h,
            omega,
            residual: Some(residual),
            rhs_norm: Some(rhs_norm),
        });
    }

    let (omega, delta) = extrapolate_ladder(&ladder);
    let delta = delta.expect("ladder has at least two levels");
    if !(delta < params.tol) || omega.iter().any(|w| !w.is_finite()) {
        let per_level: Vec<String> = ladder
            .windows(2)
            .map(|w| {
                let d = w[0]
                    .omega
                    .iter()
                    .zip(&w[1].omega)
                    .fold(R::zero(), |a, (&x, &y)| a.max((x - y).abs()));
                format!("|w({:.3e})-w({:.3e})| = {:.3e}", w[0].h, w[1].h, d)
            })
            .collect();
        return Err(Error::NoConvergence {
            context: format!(
                "weight ladder for kernel '{}' (gamma {:.6e}, p {}): level diffs [{}]",
                kernel.kernel_id(),
                kernel.gamma().to_f64().unwrap_or(f64::NAN),
                stencil.order(),
                per_level.join(", ")
            ),
            best: omega
                .iter()
                .fold(R::zero(), |a, &v| a.max(v.abs()))
                .to_f64()
                .unwrap_or(f64::NAN),
            gap: delta.to_f64().unwrap_or(f64::NAN),
        });
    }

    let last = ladder.last().expect("ladder is non-empty");
    let residual_norm = last
        .residual
        .expect("synthesized ladder entries carry residuals");
    Ok(WeightSet {
        stencil: stencil.clone(),
        omega,
        alpha: alpha.to_vec(),
        gamma: kernel.gamma(),
        kernel_id: kernel.kernel_id().to_owned(),
        kernel_params: BTreeMap::new(),
        ladder,
        residual_norm,
        condition_number: condition,
        provenance: Provenance::Synthesized,
        near_tie: alpha.iter().any(|&a| a.abs() == real::<R>(0.5)),
        synthesis: SynthesisMeta {
            cutoff_plateau: cutoff.plateau_radius(),
            cutoff_support: cutoff.support_radius(),
            profile_id: cutoff.profile_id().to_owned(),
            angular_resolution: params.angular_resolution,
            glue_points: params.glue_points,
        },
    })
}

/// Grid template with the default synthesis geometry for a stencil:
/// `L = max(2, (4/3) h0 max|c_i|)` and `L'` just past the required margin.
pub fn synthesis_template<R: Real>(
    dim: usize,
    stencil: &Stencil,
    params: &SynthesisParams<R>,
) -> Result<GridContext<R>> {
    let h_base = params
        .ladder
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameters("ladder needs at least one level".into()))?;
    let h0 = (real::<R>(1.5) * h_base).min(R::one());
    let l = real::<R>(2.0).max(real::<R>(4.0 / 3.0) * h0 * real::<R>(stencil.max_radius()));
    let sqrt_n = real::<R>((dim as f64).sqrt());
    let l_prime = l + real::<R>(1.5) * h0 * sqrt_n + R::one();
    GridContext::new(
        dim,
        h_base / real::<R>(2.0),
        vec![R::zero(); dim],
        vec![0; dim],
        h0,
        l,
        l_prime,
    )
}

#[cfg(test)]
mod tests;

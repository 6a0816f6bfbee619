//! Weight tables over a uniform offset grid and their interpolation.

use std::collections::BTreeMap;

use super::{solve_weights, Provenance, Stencil, SynthesisMeta, SynthesisParams, WeightSet};
use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::grid::GridContext;
use crate::kernel::SingularKernel;
use crate::real::{real, real_usize, Real};

/// One table node: either a synthesized weight set or the error that
/// prevented it.
#[derive(Clone, Debug)]
pub struct TableEntry<R: Real> {
    pub alpha: Vec<R>,
    pub weights: Option<WeightSet<R>>,
    pub error: Option<String>,
}

/// Weight sets tabulated on the uniform grid over `[-1/2, 1/2]^n` with
/// `resolution + 1` nodes per axis (endpoints included), stored row-major.
#[derive(Clone, Debug)]
pub struct WeightTable<R: Real> {
    pub(crate) dim: usize,
    pub(crate) resolution: usize,
    pub gamma: R,
    pub kernel_id: String,
    pub kernel_params: BTreeMap<String, f64>,
    pub stencil: Stencil,
    pub synthesis: SynthesisMeta<R>,
    pub entries: Vec<TableEntry<R>>,
}

impl<R: Real> WeightTable<R> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of nodes per axis.
    pub fn nodes_per_axis(&self) -> usize {
        self.resolution + 1
    }

    /// Offset of the grid node with per-axis indices `idx`.
    pub fn node_alpha(&self, idx: &[usize]) -> Vec<R> {
        idx.iter()
            .map(|&i| real::<R>(-0.5) + real_usize::<R>(i) / real_usize::<R>(self.resolution))
            .collect()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let npts = self.nodes_per_axis();
        idx.iter().fold(0, |acc, &i| acc * npts + i)
    }

    pub fn entry(&self, idx: &[usize]) -> &TableEntry<R> {
        &self.entries[self.flat_index(idx)]
    }
}

/// Synthesizes a weight set for every offset on the grid. Per-entry solver
/// failures are recorded in the table, not returned as errors.
pub fn tabulate_weights<R: Real>(
    kernel: &SingularKernel<R>,
    order: u32,
    resolution: usize,
    template: &GridContext<R>,
    cutoff: &RadialCutoff<R>,
    params: &SynthesisParams<R>,
) -> Result<WeightTable<R>> {
    if resolution < 2 {
        return Err(Error::InvalidParameters(
            "offset grid resolution must be at least 2".into(),
        ));
    }
    let dim = kernel.dim();
    let stencil = Stencil::default_stencil(order, dim);
    let npts = resolution + 1;
    let total = npts.pow(dim as u32);
    let mut entries = Vec::with_capacity(total);
    let mut meta: Option<SynthesisMeta<R>> = None;
    for flat in 0..total {
        let mut rem = flat;
        let mut idx = vec![0usize; dim];
        for d in (0..dim).rev() {
            idx[d] = rem % npts;
            rem /= npts;
        }
        let alpha: Vec<R> = idx
            .iter()
            .map(|&i| real::<R>(-0.5) + real_usize::<R>(i) / real_usize::<R>(resolution))
            .collect();
        match solve_weights(kernel, &stencil, &alpha, template, cutoff, params) {
            Ok(ws) => {
                if meta.is_none() {
                    meta = Some(ws.synthesis.clone());
                }
                entries.push(TableEntry {
                    alpha,
                    weights: Some(ws),
                    error: None,
                });
            }
            Err(err) => entries.push(TableEntry {
                alpha,
                weights: None,
                error: Some(err.to_string()),
            }),
        }
    }
    let synthesis = meta.unwrap_or(SynthesisMeta {
        cutoff_plateau: cutoff.plateau_radius(),
        cutoff_support: cutoff.support_radius(),
        profile_id: cutoff.profile_id().to_owned(),
        angular_resolution: params.angular_resolution,
        glue_points: params.glue_points,
    });
    Ok(WeightTable {
        dim,
        resolution,
        gamma: kernel.gamma(),
        kernel_id: kernel.kernel_id().to_owned(),
        kernel_params: BTreeMap::new(),
        stencil,
        synthesis,
        entries,
    })
}

/// Per-axis interpolation window: up to four nearest nodes.
struct AxisWindow {
    start: usize,
    /// Lagrange basis values at the query coordinate.
    basis: Vec<f64>,
}

fn axis_window(t: f64, npts: usize) -> AxisWindow {
    // Snap to an exact node so that node queries reproduce stored entries.
    let snapped = if (t - t.round()).abs() < 1e-9 {
        t.round()
    } else {
        t
    };
    let width = npts.min(4);
    let start = if npts <= 4 {
        0
    } else {
        let anchor = snapped.floor() as isize - 1;
        anchor.clamp(0, npts as isize - width as isize) as usize
    };
    let mut basis = vec![0.0; width];
    for (i, b) in basis.iter_mut().enumerate() {
        let xi = (start + i) as f64;
        let mut acc = 1.0;
        for k in 0..width {
            if k == i {
                continue;
            }
            let xk = (start + k) as f64;
            acc *= (snapped - xk) / (xi - xk);
        }
        *b = acc;
    }
    AxisWindow { start, basis }
}

/// Tensor-product cubic interpolation of the tabulated weights at an
/// arbitrary offset in `[-1/2, 1/2]^n`. The result is flagged as
/// interpolated, and as near the tie region when the query sits within one
/// grid cell of `|alpha_i| = 1/2`.
pub fn interpolate_weights<R: Real>(table: &WeightTable<R>, alpha: &[R]) -> Result<WeightSet<R>> {
    let dim = table.dim();
    if alpha.len() != dim {
        return Err(Error::InvalidParameters("offset dimension mismatch".into()));
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
    let res = table.resolution() as f64;
    let windows: Vec<AxisWindow> = alpha
        .iter()
        .map(|&a| axis_window((a.to_f64().unwrap() + 0.5) * res, table.nodes_per_axis()))
        .collect();

    let width = table.stencil.len();
    let mut omega = vec![R::zero(); width];
    let mut residual = R::zero();
    let mut condition = R::zero();
    let mut idx = vec![0usize; dim];
    let counts: Vec<usize> = windows.iter().map(|w| w.basis.len()).collect();
    'outer: loop {
        let mut coeff = 1.0;
        let mut node_idx = Vec::with_capacity(dim);
        for d in 0..dim {
            coeff *= windows[d].basis[idx[d]];
            node_idx.push(windows[d].start + idx[d]);
        }
        let entry = table.entry(&node_idx);
        let ws = entry.weights.as_ref().ok_or_else(|| {
            Error::InvalidParameters(format!(
                "table entry at alpha {:?} failed during tabulation: {}",
                entry.alpha,
                entry.error.as_deref().unwrap_or("unknown")
            ))
        })?;
        if coeff != 0.0 {
            let c = real::<R>(coeff);
            for (o, &w) in omega.iter_mut().zip(&ws.omega) {
                *o = *o + c * w;
            }
        }
        residual = residual.max(ws.residual_norm);
        condition = condition.max(ws.condition_number);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < counts[d] {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }

    let cell = R::one() / real_usize::<R>(table.resolution());
    let near_tie = alpha.iter().any(|&a| a.abs() >= half - cell);
    Ok(WeightSet {
        stencil: table.stencil.clone(),
        omega,
        alpha: alpha.to_vec(),
        gamma: table.gamma,
        kernel_id: table.kernel_id.clone(),
        kernel_params: table.kernel_params.clone(),
        ladder: Vec::new(),
        residual_norm: residual,
        condition_number: condition,
        provenance: Provenance::Interpolated,
        near_tie,
        synthesis: table.synthesis.clone(),
    })
}

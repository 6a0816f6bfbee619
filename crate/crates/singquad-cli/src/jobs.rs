//! The three batch jobs: weight precomputation, convergence studies and
//! single integrations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use singquad::kernel::SingularKernel;
use singquad::lattice::punctured_trapezoid;
use singquad::rules::WeightProvider;
use singquad::weights::{read_weight_set, read_weight_table, write_weight_set, write_weight_table};
use singquad::{
    composite_rule, corrected_rule, estimate_order, interpolate_weights, make_standard_cutoff,
    norm2, reference_integral, solve_weights, synthesis_template, tabulate_weights, GridContext64,
    RadialCutoff64, SingularKernel64, SmoothFactor64, Stencil, SynthesisParams64, WeightSet64,
    WeightTable64,
};

use crate::catalog::{build_factor, build_kernel};
use crate::config::{load, ConvergeJob, IntegrateJob, RuleKind, SynthesisConfig, WeightsJob};
use crate::report::{median_of_last_pairs, render_csv, render_markdown, ReportMeta, SweepRow};
use crate::support::{file_hash, fnv1a64, numerical, parallel_map, sayln, usage, CliError};

const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

fn build_synthesis(
    dim: usize,
    cfg: &SynthesisConfig,
    order: u32,
) -> Result<(SynthesisParams64, RadialCutoff64), CliError> {
    let mut params = SynthesisParams64::default_for_dim(dim);
    if let Some(ladder) = &cfg.ladder {
        let rho = ladder.ratio.unwrap_or(2.0);
        if !(ladder.h_base > 0.0 && ladder.h_base < 1.0 && rho > 1.0 && ladder.levels >= 2) {
            return Err(usage(
                "ladder needs 0 < h_base < 1, ratio > 1 and at least two levels",
            ));
        }
        params.ladder = (0..ladder.levels)
            .map(|j| ladder.h_base / rho.powi(j as i32))
            .collect();
    }
    // High-order rows sit on an evaluation-noise floor ~eps/h^{gamma+n+p},
    // which the conservative stability metric cannot certify to 1e-6.
    params.tol = cfg.tol.unwrap_or(if order >= 2 { 1e-4 } else { 1e-6 });
    if let Some(res) = cfg.angular_resolution {
        params.angular_resolution = res;
    }
    if let Some(g) = cfg.glue_points {
        params.glue_points = g;
    }
    let cutoff = match &cfg.cutoff {
        Some(c) => make_standard_cutoff(c.a, c.b).map_err(|e| usage(e.to_string()))?,
        None => singquad::default_cutoff::<f64>(),
    };
    Ok((params, cutoff))
}

fn eval_grid_for(
    n: usize,
    h: f64,
    h_max: f64,
    x0: &X0Mode,
    stencil_radius: f64,
) -> Result<GridContext64, CliError> {
    if !(h > 0.0 && h < 1.0 && h.is_finite()) {
        return Err(usage(format!("spacing h must lie in (0, 1), got {h}")));
    }
    let h0 = (1.5 * h_max).min(1.0);
    let window = 2.0f64.max(4.0 / 3.0 * h0 * stencil_radius);
    let kernel_radius = window + 1.5 * (n as f64).sqrt() * h0 + 1.0;
    match x0 {
        X0Mode::Fixed(x0) => GridContext64::for_singularity(x0, h, h0, window, kernel_radius)
            .map_err(|e| usage(e.to_string())),
        X0Mode::ScaledAlpha(alpha) => {
            GridContext64::new(n, h, alpha.clone(), vec![0; n], h0, window, kernel_radius)
                .map_err(|e| usage(e.to_string()))
        }
    }
}

#[derive(Clone)]
enum X0Mode {
    Fixed(Vec<f64>),
    ScaledAlpha(Vec<f64>),
}

impl X0Mode {
    fn from_config(
        n: usize,
        x0: &Option<Vec<f64>>,
        x0_alpha: &Option<Vec<f64>>,
    ) -> Result<X0Mode, CliError> {
        match (x0, x0_alpha) {
            (Some(_), Some(_)) => Err(usage("specify either x0 or x0_alpha, not both")),
            (Some(p), None) => {
                if p.len() != n {
                    return Err(usage("x0 length must match n"));
                }
                Ok(X0Mode::Fixed(p.clone()))
            }
            (None, Some(a)) => {
                if a.len() != n {
                    return Err(usage("x0_alpha length must match n"));
                }
                Ok(X0Mode::ScaledAlpha(a.clone()))
            }
            (None, None) => Ok(X0Mode::Fixed(vec![0.0; n])),
        }
    }

    fn describe(&self) -> String {
        match self {
            X0Mode::Fixed(p) => format!("fixed x0 = {p:?}"),
            X0Mode::ScaledAlpha(a) => format!("x0 = h * alpha with alpha = {a:?}"),
        }
    }

    fn singularity_at(&self, h: f64) -> Vec<f64> {
        match self {
            X0Mode::Fixed(p) => p.clone(),
            X0Mode::ScaledAlpha(a) => a.iter().map(|&ai| h * ai).collect(),
        }
    }
}

type WeightKey = (String, u64, u32, Vec<u64>);

/// Synthesis cache shared across sweep points. Computation happens outside
/// the lock; duplicated work across workers yields bit-identical results.
struct WeightCache {
    map: Mutex<HashMap<WeightKey, WeightSet64>>,
}

impl WeightCache {
    fn new() -> Self {
        WeightCache {
            map: Mutex::new(HashMap::new()),
        }
    }

    fn weights(
        &self,
        kernel: &SingularKernel64,
        order: u32,
        alpha: &[f64],
        cutoff: &RadialCutoff64,
        params: &SynthesisParams64,
    ) -> Result<WeightSet64, singquad::Error> {
        let key: WeightKey = (
            kernel.kernel_id().to_owned(),
            kernel.gamma().to_bits(),
            order,
            alpha.iter().map(|a| a.to_bits()).collect(),
        );
        if let Some(ws) = self.map.lock().expect("weight cache poisoned").get(&key) {
            return Ok(ws.clone());
        }
        let stencil = Stencil::default_stencil(order, kernel.dim());
        let template = synthesis_template(kernel.dim(), &stencil, params)?;
        let ws = solve_weights(kernel, &stencil, alpha, &template, cutoff, params)?;
        self.map
            .lock()
            .expect("weight cache poisoned")
            .insert(key, ws.clone());
        Ok(ws)
    }
}

struct CacheProvider<'a> {
    cache: &'a WeightCache,
    cutoff: &'a RadialCutoff64,
    params: &'a SynthesisParams64,
}

impl WeightProvider<f64> for CacheProvider<'_> {
    fn weights_for(
        &mut self,
        term_kernel: &SingularKernel<f64>,
        order: u32,
        grid: &GridContext64,
    ) -> singquad::Result<WeightSet64> {
        self.cache
            .weights(term_kernel, order, grid.alpha(), self.cutoff, self.params)
    }
}

enum WeightSource {
    Synthesize,
    File(Box<WeightSet64>, String),
    Table(Box<WeightTable64>, String),
}

impl WeightSource {
    fn load(path: &Option<PathBuf>) -> Result<WeightSource, CliError> {
        let Some(path) = path else {
            return Ok(WeightSource::Synthesize);
        };
        let note = format!("{} ({})", path.display(), file_hash(path)?);
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let is_table = serde_json::from_str::<serde_json::Value>(&text)
            .map(|v| v.get("records").is_some())
            .unwrap_or(false);
        if is_table {
            let table = read_weight_table::<f64>(path).map_err(|e| usage(e.to_string()))?;
            Ok(WeightSource::Table(Box::new(table), note))
        } else {
            let ws = read_weight_set::<f64>(path).map_err(|e| usage(e.to_string()))?;
            Ok(WeightSource::File(Box::new(ws), note))
        }
    }

    fn describe(&self, params: &SynthesisParams64) -> String {
        match self {
            WeightSource::Synthesize => format!(
                "synthesized inline (ladder {:?}, tol {:e})",
                params.ladder, params.tol
            ),
            WeightSource::File(_, note) => format!("weight file {note}"),
            WeightSource::Table(_, note) => format!("weight table {note}, interpolated"),
        }
    }
}

/// One rule evaluation. Returns the value and the weight provenance label.
#[allow(clippy::too_many_arguments)]
fn evaluate_rule(
    rule: RuleKind,
    kernel: &SingularKernel64,
    v: &SmoothFactor64,
    grid: &GridContext64,
    order: u32,
    source: &WeightSource,
    cache: &WeightCache,
    cutoff: &RadialCutoff64,
    params: &SynthesisParams64,
) -> Result<(f64, &'static str), CliError> {
    let n = grid.dim();
    match rule {
        RuleKind::Punctured => {
            let h = grid.spacing();
            let shift: Vec<f64> = grid.alpha().iter().map(|a| h * a).collect();
            let translation: Vec<f64> = grid.node().iter().map(|&m| h * m as f64).collect();
            let integrand = |y: &[f64]| {
                let mut rel = [0.0; 3];
                let mut x = [0.0; 3];
                for d in 0..n {
                    rel[d] = y[d] - shift[d];
                    x[d] = y[d] + translation[d];
                }
                kernel.eval(&rel[..n]) * v.eval(&x[..n])
            };
            let value =
                punctured_trapezoid(integrand, v.support_radius() + norm2(&translation), grid)
                    .map_err(numerical)?;
            Ok((value, "none"))
        }
        RuleKind::Corrected => {
            if !kernel.is_r_independent() {
                return Err(usage(
                    "the corrected rule needs an r-independent kernel; use rule = composite",
                ));
            }
            let (ws, label) = match source {
                WeightSource::Synthesize => (
                    cache
                        .weights(kernel, order, grid.alpha(), cutoff, params)
                        .map_err(numerical)?,
                    "synthesized",
                ),
                WeightSource::File(ws, _) => ((**ws).clone(), "file"),
                WeightSource::Table(table, _) => (
                    interpolate_weights(table, grid.alpha()).map_err(numerical)?,
                    "interpolated",
                ),
            };
            let value = corrected_rule(kernel, v, grid, &ws).map_err(numerical)?;
            Ok((value, label))
        }
        RuleKind::Composite => {
            if !matches!(source, WeightSource::Synthesize) {
                return Err(usage(
                    "the composite rule synthesizes weights per expansion term; weight files apply to the corrected rule",
                ));
            }
            let mut provider = CacheProvider {
                cache,
                cutoff,
                params,
            };
            let value = composite_rule(kernel, v, grid, &mut provider, order).map_err(numerical)?;
            Ok((value, "synthesized"))
        }
    }
}

fn resolve_out(path: Option<PathBuf>, default_name: &str, out_dir: &Option<PathBuf>) -> PathBuf {
    let path = path.unwrap_or_else(|| PathBuf::from(default_name));
    match (path.is_relative(), out_dir) {
        (true, Some(dir)) => dir.join(path),
        _ => path,
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

pub fn cmd_weights(config: &Path, out_dir: &Option<PathBuf>) -> Result<(), CliError> {
    let job: WeightsJob = load(config).map_err(usage)?;
    let spec = build_kernel(&job.kernel, job.n, job.gamma).map_err(usage)?;
    if !spec.kernel.is_r_independent() {
        return Err(usage(
            "weight synthesis applies to r-independent kernels; expansion terms of an r-dependent kernel get their own weights through the composite rule",
        ));
    }
    let (params, cutoff) = build_synthesis(job.n, &job.synthesis, job.p)?;
    let stencil = Stencil::default_stencil(job.p, job.n);
    let template = synthesis_template(job.n, &stencil, &params).map_err(numerical)?;

    match (&job.alpha, job.alpha_grid_resolution) {
        (Some(_), Some(_)) => Err(usage("specify either alpha or alpha_grid_resolution")),
        (alpha, None) => {
            let alpha = alpha.clone().unwrap_or_else(|| vec![0.0; job.n]);
            if alpha.len() != job.n {
                return Err(usage("alpha length must match n"));
            }
            let mut ws = solve_weights(&spec.kernel, &stencil, &alpha, &template, &cutoff, &params)
                .map_err(numerical)?;
            ws.kernel_params = spec.params.clone();
            let out = resolve_out(job.out, "weights.json", out_dir);
            ensure_parent(&out)?;
            write_weight_set(&ws, &out).map_err(numerical)?;
            sayln!("wrote {}", out.display());
            sayln!("omega = {:?}", ws.omega);
            sayln!("residual_norm = {:.16e}", ws.residual_norm);
            sayln!("condition_number = {:.16e}", ws.condition_number);
            Ok(())
        }
        (None, Some(resolution)) => {
            let mut table =
                tabulate_weights(&spec.kernel, job.p, resolution, &template, &cutoff, &params)
                    .map_err(numerical)?;
            table.kernel_params = spec.params.clone();
            for entry in &mut table.entries {
                if let Some(ws) = entry.weights.as_mut() {
                    ws.kernel_params = spec.params.clone();
                }
            }
            let failures: Vec<String> = table
                .entries
                .iter()
                .filter_map(|e| {
                    e.error
                        .as_ref()
                        .map(|err| format!("alpha {:?}: {err}", e.alpha))
                })
                .collect();
            let out = resolve_out(job.out, "weight_table.json", out_dir);
            ensure_parent(&out)?;
            write_weight_table(&table, &out).map_err(numerical)?;
            sayln!("wrote {} ({} entries)", out.display(), table.entries.len());
            if failures.is_empty() {
                Ok(())
            } else {
                for f in &failures {
                    eprintln!("entry failed: {f}");
                }
                Err(numerical(format!(
                    "{} of {} table entries failed",
                    failures.len(),
                    table.entries.len()
                )))
            }
        }
    }
}

pub fn cmd_integrate(config: &Path, out_dir: &Option<PathBuf>) -> Result<(), CliError> {
    let _ = out_dir;
    let job: IntegrateJob = load(config).map_err(usage)?;
    let spec = build_kernel(&job.kernel, job.n, job.gamma).map_err(usage)?;
    let v = build_factor(&job.v, job.n).map_err(usage)?;
    let order = job.p.unwrap_or(0);
    let (params, cutoff) = build_synthesis(job.n, &job.synthesis, order)?;
    let x0 = X0Mode::from_config(job.n, &job.x0, &None)?;
    let stencil_radius = if matches!(job.rule, RuleKind::Punctured) {
        0.0
    } else {
        Stencil::default_stencil(order, job.n).max_radius()
    };
    if matches!(job.rule, RuleKind::Punctured) && job.weights_file.is_some() {
        return Err(usage("the punctured rule takes no weights"));
    }
    let grid = eval_grid_for(job.n, job.h, job.h, &x0, stencil_radius)?;
    let source = WeightSource::load(&job.weights_file)?;
    let cache = WeightCache::new();
    let (value, provenance) = evaluate_rule(
        job.rule,
        &spec.kernel,
        &v,
        &grid,
        order,
        &source,
        &cache,
        &cutoff,
        &params,
    )?;
    sayln!("value = {value:.16e}");
    sayln!("rule = {}", job.rule);
    sayln!("h = {:.16e}", job.h);
    sayln!("alpha = {:?}", grid.alpha());
    sayln!("p = {order}");
    sayln!("weights = {provenance}");
    Ok(())
}

pub fn cmd_converge(
    config: &Path,
    out_dir: &Option<PathBuf>,
    workers: usize,
) -> Result<(), CliError> {
    let config_bytes = std::fs::read(config)
        .map_err(|e| usage(format!("cannot read config {}: {e}", config.display())))?;
    let job: ConvergeJob = load(config).map_err(usage)?;

    let mut sweep = job.h_sweep.spacings();
    if sweep.is_empty() {
        return Err(usage("h sweep must not be empty"));
    }
    if sweep
        .iter()
        .any(|h| !(h.is_finite() && *h > 0.0 && *h < 1.0))
    {
        return Err(usage("every sweep spacing must lie in (0, 1)"));
    }
    sweep.sort_by(|a, b| b.partial_cmp(a).expect("finite spacings"));
    if sweep.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("sweep spacings must be distinct"));
    }
    let h_max = sweep[0];

    let spec = build_kernel(&job.kernel, job.n, job.gamma).map_err(usage)?;
    let v = build_factor(&job.v, job.n).map_err(usage)?;
    let order = job.p.unwrap_or(0);
    let (params, cutoff) = build_synthesis(job.n, &job.synthesis, order)?;
    let x0 = X0Mode::from_config(job.n, &job.x0, &job.x0_alpha)?;
    let oracle_tol = job.oracle_tol.unwrap_or(1e-11);
    let stencil_radius = if matches!(job.rule, RuleKind::Punctured) {
        0.0
    } else {
        Stencil::default_stencil(order, job.n).max_radius()
    };
    let source = WeightSource::load(&job.weights_file)?;
    if matches!(job.rule, RuleKind::Punctured) && job.weights_file.is_some() {
        return Err(usage("the punctured rule takes no weights"));
    }

    let cache = WeightCache::new();
    let reference_cache: Mutex<HashMap<Vec<u64>, (f64, f64, bool)>> = Mutex::new(HashMap::new());
    let kernel = &spec.kernel;
    let v_ref = &v;
    let point = |i: usize| -> Result<(SweepRow, bool, f64), CliError> {
        let h = sweep[i];
        let grid = eval_grid_for(job.n, h, h_max, &x0, stencil_radius)?;
        let x0_here = x0.singularity_at(h);
        let key: Vec<u64> = x0_here.iter().map(|c| c.to_bits()).collect();
        let cached = reference_cache
            .lock()
            .expect("reference cache")
            .get(&key)
            .copied();
        let (reference, achieved, verified) = match cached {
            Some(r) => r,
            None => {
                let r = match reference_integral(kernel, v_ref, &x0_here, oracle_tol) {
                    Ok(r) => (r.value, r.achieved_tol, true),
                    Err(singquad::Error::NoConvergence { best, gap, .. }) => (best, gap, false),
                    Err(e) => return Err(numerical(e)),
                };
                reference_cache
                    .lock()
                    .expect("reference cache")
                    .insert(key, r);
                r
            }
        };
        let (value, provenance) = evaluate_rule(
            job.rule, kernel, v_ref, &grid, order, &source, &cache, &cutoff, &params,
        )?;
        let _ = provenance;
        Ok((
            SweepRow {
                h,
                value,
                reference,
                abs_error: (value - reference).abs(),
                observed_order: None,
            },
            verified,
            achieved,
        ))
    };
    let outcomes = parallel_map(sweep.len(), workers, point);
    let mut rows = Vec::with_capacity(sweep.len());
    let mut all_verified = true;
    let mut worst_achieved = 0.0f64;
    for outcome in outcomes {
        let (row, verified, achieved) = outcome?;
        all_verified &= verified;
        worst_achieved = worst_achieved.max(achieved);
        rows.push(row);
    }

    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.abs_error)).collect();
    let orders = estimate_order(&samples).map_err(numerical)?;
    for (i, order_est) in orders.iter().enumerate() {
        rows[i + 1].observed_order = *order_est;
    }
    let median = median_of_last_pairs(&orders);

    let theoretical = match job.rule {
        RuleKind::Punctured => job.gamma + job.n as f64,
        _ => job.gamma + job.n as f64 + f64::from(order) + 1.0,
    };
    let oracle_note = if all_verified {
        format!("adaptive polar oracle, tol {oracle_tol:e}, worst achieved {worst_achieved:e}")
    } else {
        format!("oracle did not reach tol {oracle_tol:e}; best estimates used")
    };
    let meta = ReportMeta {
        rule: job.rule.to_string(),
        kernel_id: kernel.kernel_id().to_owned(),
        gamma: job.gamma,
        dim: job.n,
        factor_id: v.factor_id().to_owned(),
        order: (!matches!(job.rule, RuleKind::Punctured)).then_some(order),
        x0_mode: x0.describe(),
        theoretical_order: theoretical,
        median_observed: median,
        verified: all_verified,
        oracle_note,
        config_hash: format!("fnv1a:{:016x}", fnv1a64(&config_bytes)),
        library_version: LIBRARY_VERSION.to_owned(),
        weights_note: if matches!(job.rule, RuleKind::Punctured) {
            "none (punctured rule)".to_owned()
        } else {
            source.describe(&params)
        },
    };

    let csv_path = resolve_out(job.out_csv, "report.csv", out_dir);
    let md_path = resolve_out(job.out_md, "report.md", out_dir);
    ensure_parent(&csv_path)?;
    ensure_parent(&md_path)?;
    std::fs::write(&csv_path, render_csv(&rows))
        .map_err(|e| usage(format!("cannot write {}: {e}", csv_path.display())))?;
    std::fs::write(&md_path, render_markdown(&meta, &rows))
        .map_err(|e| usage(format!("cannot write {}: {e}", md_path.display())))?;

    match median {
        Some(m) => sayln!(
            "{} rule: theoretical order {theoretical}, median observed {m:.4}{}",
            job.rule,
            if all_verified { "" } else { " [NOT-VERIFIED]" }
        ),
        None => sayln!(
            "{} rule: theoretical order {theoretical}, observed order undefined{}",
            job.rule,
            if all_verified { "" } else { " [NOT-VERIFIED]" }
        ),
    }
    sayln!("wrote {}", csv_path.display());
    sayln!("wrote {}", md_path.display());
    Ok(())
}

//! Kernel and smooth-factor catalogs backing the config ids.
//!
//! The factors are windows and window-times-polynomial products, so support
//! radii are exact and the smoothness hypotheses of the rules hold by
//! construction.

use std::collections::BTreeMap;
use std::sync::Arc;

use singquad::kernel::{DirectionFn, PointFn, RadialDirectionFn};
use singquad::{default_cutoff, SingularKernel64, SmoothFactor64};

use crate::config::{FactorConfig, KernelConfig};

pub struct KernelSpec {
    pub kernel: SingularKernel64,
    pub params: BTreeMap<String, f64>,
}

pub fn build_kernel(cfg: &KernelConfig, n: usize, gamma: f64) -> Result<KernelSpec, String> {
    let mut params = BTreeMap::new();
    let kernel = match cfg.id.as_str() {
        "const" => SingularKernel64::r_independent(n, gamma, "const", Arc::new(|_: &[f64]| 1.0))
            .map_err(|e| e.to_string())?,
        "cos_k" | "sin_k" => {
            if n != 2 {
                return Err(format!(
                    "kernel '{}' is a circle harmonic and needs n = 2",
                    cfg.id
                ));
            }
            let k = cfg
                .k
                .ok_or_else(|| format!("kernel '{}' needs the parameter k", cfg.id))?;
            params.insert("k".into(), f64::from(k));
            let id = format!("{}_{k}", &cfg.id[..3]);
            let angular: DirectionFn<f64> = if cfg.id.starts_with("cos") {
                Arc::new(move |u: &[f64]| (f64::from(k) * u[1].atan2(u[0])).cos())
            } else {
                Arc::new(move |u: &[f64]| (f64::from(k) * u[1].atan2(u[0])).sin())
            };
            SingularKernel64::r_independent(n, gamma, id, angular).map_err(|e| e.to_string())?
        }
        "harmonics" => {
            if n != 2 {
                return Err("kernel 'harmonics' needs n = 2".into());
            }
            let terms = cfg
                .harmonics
                .clone()
                .ok_or_else(|| "kernel 'harmonics' needs a harmonics list".to_string())?;
            if terms.is_empty() {
                return Err("kernel 'harmonics' needs at least one term".into());
            }
            let mut id = String::from("harmonics");
            let mut compiled: Vec<(bool, f64, f64)> = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let is_cos = match t.kind.as_str() {
                    "cos" => true,
                    "sin" => false,
                    other => return Err(format!("unknown harmonic kind '{other}'")),
                };
                id.push_str(&format!("_{}{}x{:+e}", t.kind, t.k, t.coeff));
                params.insert(format!("k{i}"), f64::from(t.k));
                params.insert(format!("coeff{i}"), t.coeff);
                compiled.push((is_cos, f64::from(t.k), t.coeff));
            }
            let angular: DirectionFn<f64> = Arc::new(move |u: &[f64]| {
                let theta = u[1].atan2(u[0]);
                compiled
                    .iter()
                    .map(|&(is_cos, k, c)| {
                        if is_cos {
                            c * (k * theta).cos()
                        } else {
                            c * (k * theta).sin()
                        }
                    })
                    .sum()
            });
            SingularKernel64::r_independent(n, gamma, id, angular).map_err(|e| e.to_string())?
        }
        "exp_r" => {
            let full: RadialDirectionFn<f64> = Arc::new(|r: f64, _: &[f64]| r.exp());
            let expansion: Vec<DirectionFn<f64>> = (0..=8u32)
                .map(|k| {
                    let inv_fact = 1.0 / (1..=u64::from(k)).product::<u64>().max(1) as f64;
                    let term: DirectionFn<f64> = Arc::new(move |_: &[f64]| inv_fact);
                    term
                })
                .collect();
            SingularKernel64::with_expansion(n, gamma, "exp_r", full, expansion)
                .map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown kernel id '{other}'")),
    };
    Ok(KernelSpec { kernel, params })
}

pub fn build_factor(cfg: &FactorConfig, n: usize) -> Result<SmoothFactor64, String> {
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err("factor radius must be positive and finite".into());
    }
    match cfg.id.as_str() {
        "zero" => Ok(SmoothFactor64::zero(n, cfg.radius)),
        "window" => {
            let cutoff = default_cutoff::<f64>();
            let radius = cfg.radius;
            let value: PointFn<f64> = Arc::new(move |x: &[f64]| cutoff.eval_window(radius, x));
            SmoothFactor64::new(n, radius, "window", value).map_err(|e| e.to_string())
        }
        "window_poly" => {
            let cutoff = default_cutoff::<f64>();
            let radius = cfg.radius;
            let constant = cfg.constant.unwrap_or(1.0);
            let linear = cfg.linear.clone().unwrap_or_else(|| vec![0.0; n]);
            if linear.len() != n {
                return Err("factor 'window_poly' linear coefficients must match n".into());
            }
            let monomials = cfg.monomials.clone().unwrap_or_default();
            if monomials.iter().any(|m| m.exponents.len() != n) {
                return Err("factor 'window_poly' monomial exponents must match n".into());
            }
            let mut id = format!("window_poly(c={constant},a={linear:?}");
            for m in &monomials {
                id.push_str(&format!(",{:+e}*x^{:?}", m.coeff, m.exponents));
            }
            id.push(')');
            let value: PointFn<f64> = Arc::new(move |x: &[f64]| {
                let mut poly: f64 =
                    constant + x.iter().zip(&linear).map(|(xi, ai)| xi * ai).sum::<f64>();
                for m in &monomials {
                    let mut term = m.coeff;
                    for (xi, &e) in x.iter().zip(&m.exponents) {
                        term *= xi.powi(e as i32);
                    }
                    poly += term;
                }
                cutoff.eval_window(radius, x) * poly
            });
            SmoothFactor64::new(n, radius, id, value).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown factor id '{other}'")),
    }
}

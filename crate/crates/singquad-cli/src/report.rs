//! Convergence-report CSV and Markdown writers. Output is byte-deterministic
//! for a given job: fixed formatting, no timestamps.

use std::fmt::Write as _;

pub struct SweepRow {
    pub h: f64,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub observed_order: Option<f64>,
}

pub struct ReportMeta {
    pub rule: String,
    pub kernel_id: String,
    pub gamma: f64,
    pub dim: usize,
    pub factor_id: String,
    pub order: Option<u32>,
    pub x0_mode: String,
    pub theoretical_order: f64,
    pub median_observed: Option<f64>,
    pub verified: bool,
    pub oracle_note: String,
    pub config_hash: String,
    pub library_version: String,
    pub weights_note: String,
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("h,value,reference,abs_error,observed_order\n");
    for row in rows {
        let order = row.observed_order.map(fmt17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(row.h),
            fmt17(row.value),
            fmt17(row.reference),
            fmt17(row.abs_error),
            order
        );
    }
    out
}

pub fn render_markdown(meta: &ReportMeta, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Convergence report: {} rule\n", meta.rule);
    let _ = writeln!(
        out,
        "- kernel: `{}` (gamma = {}, n = {})",
        meta.kernel_id, meta.gamma, meta.dim
    );
    let _ = writeln!(out, "- smooth factor: `{}`", meta.factor_id);
    if let Some(p) = meta.order {
        let _ = writeln!(out, "- correction order p: {p}");
    }
    let _ = writeln!(out, "- singularity: {}", meta.x0_mode);
    let _ = writeln!(out, "- theoretical order: {}", meta.theoretical_order);
    match meta.median_observed {
        Some(m) => {
            let _ = writeln!(out, "- median observed order (last three pairs): {m:.4}");
        }
        None => {
            let _ = writeln!(
                out,
                "- median observed order: not defined (errors hit zero)"
            );
        }
    }
    if meta.verified {
        let _ = writeln!(out, "- reference: verified ({})", meta.oracle_note);
    } else {
        let _ = writeln!(out, "- reference: **NOT-VERIFIED** ({})", meta.oracle_note);
    }
    let _ = writeln!(out, "- weights: {}", meta.weights_note);
    let _ = writeln!(out, "- config hash: {}", meta.config_hash);
    let _ = writeln!(out, "- library version: {}", meta.library_version);
    let _ = writeln!(
        out,
        "\n| h | value | reference | abs_error | observed_order |"
    );
    let _ = writeln!(
        out,
        "|---|-------|-----------|-----------|----------------|"
    );
    for row in rows {
        let order = row
            .observed_order
            .map(|o| format!("{o:.4}"))
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "| {:.6e} | {} | {} | {:.6e} | {} |",
            row.h,
            fmt17(row.value),
            fmt17(row.reference),
            row.abs_error,
            order
        );
    }
    out
}

/// Median of the observed orders over the last (up to) three pairs,
/// damping preasymptotic noise.
pub fn median_of_last_pairs(orders: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = orders.iter().rev().filter_map(|o| *o).take(3).collect();
    if defined.is_empty() {
        return None;
    }
    let mut sorted = defined;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("orders are finite"));
    Some(sorted[sorted.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_uses_last_three_defined_pairs() {
        let orders = vec![Some(10.0), Some(1.0), Some(2.0), Some(3.0)];
        assert_eq!(median_of_last_pairs(&orders), Some(2.0));
        let orders = vec![None, Some(1.5), None];
        assert_eq!(median_of_last_pairs(&orders), Some(1.5));
        assert_eq!(median_of_last_pairs(&[None, None]), None);
    }

    #[test]
    fn csv_shape_is_stable() {
        let rows = vec![SweepRow {
            h: 0.1,
            value: 1.0,
            reference: 1.5,
            abs_error: 0.5,
            observed_order: None,
        }];
        let csv = render_csv(&rows);
        assert!(csv.starts_with("h,value,reference,abs_error,observed_order\n"));
        assert!(csv.contains("1.0000000000000001e-1"));
        assert!(csv.ends_with(",\n"));
    }
}

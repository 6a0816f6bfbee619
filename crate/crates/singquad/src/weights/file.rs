//! Weight-file serialization.
//!
//! Files are JSON. The writer is hand-rolled so every real is emitted with
//! exactly 17 significant digits (enough to round-trip an f64 bit-exactly)
//! and the field order is deterministic. Reading goes through serde.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{LadderEntry, Provenance, Stencil, SynthesisMeta, TableEntry, WeightSet, WeightTable};
use crate::error::{Error, Result};
use crate::real::{real, Real};

pub(crate) const FORMAT_VERSION: u32 = 1;

fn real_to_json<R: Real>(x: R) -> Result<String> {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if !v.is_finite() {
        return Err(Error::InvalidParameters(format!(
            "cannot serialize non-finite value {v} into a weight file"
        )));
    }
    Ok(format!("{v:.16e}"))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn real_array<R: Real>(xs: &[R]) -> Result<String> {
    let parts: Result<Vec<String>> = xs.iter().map(|&x| real_to_json(x)).collect();
    Ok(format!("[{}]", parts?.join(",")))
}

fn stencil_array(stencil: &Stencil) -> String {
    let rows: Vec<String> = stencil
        .points()
        .iter()
        .map(|c| {
            let nums: Vec<String> = c.iter().map(|k| k.to_string()).collect();
            format!("[{}]", nums.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

fn params_object(params: &BTreeMap<String, f64>) -> Result<String> {
    let mut parts = Vec::with_capacity(params.len());
    for (k, &v) in params {
        parts.push(format!("\"{}\":{}", escape(k), real_to_json(v)?));
    }
    Ok(format!("{{{}}}", parts.join(",")))
}

fn weight_set_body<R: Real>(ws: &WeightSet<R>) -> Result<String> {
    let mut ladder_parts = Vec::with_capacity(ws.ladder.len());
    for entry in &ws.ladder {
        ladder_parts.push(format!(
            "{{\"h\":{},\"omega\":{}}}",
            real_to_json(entry.h)?,
            real_array(&entry.omega)?
        ));
    }
    Ok(format!(
        concat!(
            "\"format_version\":{},",
            "\"n\":{},",
            "\"gamma\":{},",
            "\"p\":{},",
            "\"kernel_id\":\"{}\",",
            "\"kernel_params\":{},",
            "\"stencil\":{},",
            "\"alpha\":{},",
            "\"omega\":{},",
            "\"ladder\":[{}],",
            "\"residual_norm\":{},",
            "\"condition_number\":{},",
            "\"cutoff\":{{\"a\":{},\"b\":{},\"profile_id\":\"{}\"}},",
            "\"angular_resolution\":{},",
            "\"glue_points\":{}"
        ),
        FORMAT_VERSION,
        ws.stencil.dim(),
        real_to_json(ws.gamma)?,
        ws.stencil.order(),
        escape(&ws.kernel_id),
        params_object(&ws.kernel_params)?,
        stencil_array(&ws.stencil),
        real_array(&ws.alpha)?,
        real_array(&ws.omega)?,
        ladder_parts.join(","),
        real_to_json(ws.residual_norm)?,
        real_to_json(ws.condition_number)?,
        real_to_json(ws.synthesis.cutoff_plateau)?,
        real_to_json(ws.synthesis.cutoff_support)?,
        escape(&ws.synthesis.profile_id),
        ws.synthesis.angular_resolution,
        ws.synthesis.glue_points,
    ))
}

/// Weight set as a JSON document.
pub fn weight_set_to_json<R: Real>(ws: &WeightSet<R>) -> Result<String> {
    Ok(format!("{{{}}}", weight_set_body(ws)?))
}

/// Weight table as a JSON document: the grid descriptor plus one record per
/// grid node (failed nodes carry an `error` field instead of weights).
pub fn weight_table_to_json<R: Real>(table: &WeightTable<R>) -> Result<String> {
    let mut records = Vec::with_capacity(table.entries.len());
    for entry in &table.entries {
        match &entry.weights {
            Some(ws) => records.push(format!("{{{}}}", weight_set_body(ws)?)),
            None => records.push(format!(
                "{{\"alpha\":{},\"error\":\"{}\"}}",
                real_array(&entry.alpha)?,
                escape(entry.error.as_deref().unwrap_or("unknown"))
            )),
        }
    }
    Ok(format!(
        concat!(
            "{{\"format_version\":{},",
            "\"grid\":{{\"n\":{},\"resolution\":{},\"min\":{},\"max\":{}}},",
            "\"records\":[{}]}}"
        ),
        FORMAT_VERSION,
        table.dim(),
        table.resolution(),
        real_to_json(real::<R>(-0.5))?,
        real_to_json(real::<R>(0.5))?,
        records.join(",")
    ))
}

pub fn write_weight_set<R: Real>(ws: &WeightSet<R>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, weight_set_to_json(ws)? + "\n")?;
    Ok(())
}

pub fn write_weight_table<R: Real>(table: &WeightTable<R>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, weight_table_to_json(table)? + "\n")?;
    Ok(())
}

#[derive(Deserialize)]
struct LadderRecord {
    h: f64,
    omega: Vec<f64>,
}

#[derive(Deserialize)]
struct CutoffRecord {
    a: f64,
    b: f64,
    profile_id: String,
}

#[derive(Deserialize)]
struct WeightRecord {
    format_version: u32,
    n: usize,
    gamma: f64,
    p: u32,
    kernel_id: String,
    #[serde(default)]
    kernel_params: BTreeMap<String, f64>,
    stencil: Vec<Vec<i64>>,
    alpha: Vec<f64>,
    omega: Vec<f64>,
    #[serde(default)]
    ladder: Vec<LadderRecord>,
    residual_norm: f64,
    condition_number: f64,
    cutoff: CutoffRecord,
    angular_resolution: usize,
    glue_points: usize,
}

impl WeightRecord {
    fn into_weight_set<R: Real>(self) -> Result<WeightSet<R>> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::MalformedFile(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let stencil = Stencil::new(self.n, self.p, self.stencil)?;
        if self.omega.len() != stencil.len() || self.alpha.len() != self.n {
            return Err(Error::MalformedFile(
                "omega/alpha length does not match the stencil".into(),
            ));
        }
        let from = |x: f64| real::<R>(x);
        Ok(WeightSet {
            omega: self.omega.iter().map(|&x| from(x)).collect(),
            alpha: self.alpha.iter().map(|&x| from(x)).collect(),
            gamma: from(self.gamma),
            kernel_id: self.kernel_id,
            kernel_params: self.kernel_params,
            ladder: self
                .ladder
                .into_iter()
                .map(|l| LadderEntry {
                    h: from(l.h),
                    omega: l.omega.iter().map(|&x| from(x)).collect(),
                    residual: None,
                    rhs_norm: None,
                })
                .collect(),
            residual_norm: from(self.residual_norm),
            condition_number: from(self.condition_number),
            provenance: Provenance::File,
            near_tie: false,
            synthesis: SynthesisMeta {
                cutoff_plateau: from(self.cutoff.a),
                cutoff_support: from(self.cutoff.b),
                profile_id: self.cutoff.profile_id,
                angular_resolution: self.angular_resolution,
                glue_points: self.glue_points,
            },
            stencil,
        })
    }
}

/// Parses a weight set from JSON text.
pub fn weight_set_from_json<R: Real>(text: &str) -> Result<WeightSet<R>> {
    let record: WeightRecord =
        serde_json::from_str(text).map_err(|e| Error::MalformedFile(e.to_string()))?;
    record.into_weight_set()
}

pub fn read_weight_set<R: Real>(path: impl AsRef<Path>) -> Result<WeightSet<R>> {
    let text = std::fs::read_to_string(path)?;
    weight_set_from_json(&text)
}

#[derive(Deserialize)]
struct GridRecord {
    n: usize,
    resolution: usize,
}

#[derive(Deserialize)]
struct TableFileRecord {
    format_version: u32,
    grid: GridRecord,
    records: Vec<serde_json::Value>,
}

pub fn read_weight_table<R: Real>(path: impl AsRef<Path>) -> Result<WeightTable<R>> {
    let text = std::fs::read_to_string(path)?;
    let file: TableFileRecord =
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let npts = file.grid.resolution + 1;
    let expected = npts.pow(file.grid.n as u32);
    if file.records.len() != expected {
        return Err(Error::MalformedFile(format!(
            "table should carry {expected} records, found {}",
            file.records.len()
        )));
    }
    let mut entries = Vec::with_capacity(file.records.len());
    let mut proto: Option<WeightSet<R>> = None;
    for value in file.records {
        if value.get("error").is_some() {
            #[derive(Deserialize)]
            struct FailedRecord {
                alpha: Vec<f64>,
                error: String,
            }
            let failed: FailedRecord =
                serde_json::from_value(value).map_err(|e| Error::MalformedFile(e.to_string()))?;
            entries.push(TableEntry {
                alpha: failed.alpha.iter().map(|&x| real::<R>(x)).collect(),
                weights: None,
                error: Some(failed.error),
            });
            continue;
        }
        let record: WeightRecord =
            serde_json::from_value(value).map_err(|e| Error::MalformedFile(e.to_string()))?;
        let ws = record.into_weight_set::<R>()?;
        if proto.is_none() {
            proto = Some(ws.clone());
        }
        entries.push(TableEntry {
            alpha: ws.alpha.clone(),
            weights: Some(ws),
            error: None,
        });
    }
    let proto = proto.ok_or_else(|| {
        Error::MalformedFile("table has no successful records to take metadata from".into())
    })?;
    Ok(WeightTable {
        dim: file.grid.n,
        resolution: file.grid.resolution,
        gamma: proto.gamma,
        kernel_id: proto.kernel_id.clone(),
        kernel_params: proto.kernel_params.clone(),
        stencil: proto.stencil.clone(),
        synthesis: proto.synthesis.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    proptest! {
        /// 17 significant digits uniquely determine an f64, so the writer's
        /// fixed format round-trips bit-exactly.
        #[test]
        fn seventeen_digit_format_roundtrips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let text = format!("{x:.16e}");
            let back: f64 = text.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits(), "{}", text);
        }
    }
}

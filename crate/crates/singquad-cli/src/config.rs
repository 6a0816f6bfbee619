//! JSON job configurations: one job per file.

use std::path::PathBuf;

use serde::Deserialize;

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Punctured,
    Corrected,
    Composite,
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleKind::Punctured => "punctured",
            RuleKind::Corrected => "corrected",
            RuleKind::Composite => "composite",
        };
        f.write_str(s)
    }
}

/// Kernel selector. Catalog ids: `const` (any n), `cos_k` / `sin_k` /
/// `harmonics` (n = 2 circle harmonics), `exp_r` (modulation `exp(r)` with
/// explicit expansion terms `1/k!`).
#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub id: String,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub harmonics: Option<Vec<HarmonicTerm>>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub kind: String,
    pub k: u32,
    pub coeff: f64,
}

/// Smooth-factor selector. Catalog ids: `zero`, `window`
/// (`psi(|x|/radius)`), and `window_poly`, the window times the polynomial
/// `constant + linear . x + sum_j coeff_j x^exponents_j`.
///
/// Order studies need a factor whose derivatives at the singularity do not
/// vanish: on the window's plateau every derivative is zero and the rules
/// superconverge, so include a monomial of degree exactly p + 1.
#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub id: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default)]
    pub linear: Option<Vec<f64>>,
    #[serde(default)]
    pub monomials: Option<Vec<MonomialTerm>>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct MonomialTerm {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

fn default_radius() -> f64 {
    1.0
}

/// Accepts `0.25` as shorthand for `[0.25]` in point/offset fields.
fn scalar_or_vec<'de, D>(de: D) -> Result<Option<Vec<f64>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Scalar(f64),
        Vector(Vec<f64>),
    }
    Ok(match Option::<Repr>::deserialize(de)? {
        None => None,
        Some(Repr::Scalar(x)) => Some(vec![x]),
        Some(Repr::Vector(v)) => Some(v),
    })
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub h_base: f64,
    pub levels: usize,
    #[serde(default)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub a: f64,
    pub b: f64,
}

/// Synthesis overrides shared by all job kinds.
#[derive(Debug, Deserialize, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    #[serde(default)]
    pub ladder: Option<LadderConfig>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub cutoff: Option<CutoffConfig>,
    #[serde(default)]
    pub angular_resolution: Option<usize>,
    #[serde(default)]
    pub glue_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsJob {
    pub n: usize,
    pub gamma: f64,
    pub kernel: KernelConfig,
    pub p: u32,
    #[serde(default, deserialize_with = "scalar_or_vec")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_grid_resolution: Option<usize>,
    #[serde(flatten)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(untagged)]
pub enum SweepConfig {
    List(Vec<f64>),
    Geometric {
        h_start: f64,
        levels: usize,
        #[serde(default)]
        ratio: Option<f64>,
    },
}

impl SweepConfig {
    pub fn spacings(&self) -> Vec<f64> {
        match self {
            SweepConfig::List(hs) => hs.clone(),
            SweepConfig::Geometric {
                h_start,
                levels,
                ratio,
            } => {
                let rho = ratio.unwrap_or(2.0);
                (0..*levels).map(|j| h_start / rho.powi(j as i32)).collect()
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeJob {
    pub rule: RuleKind,
    pub n: usize,
    pub gamma: f64,
    pub kernel: KernelConfig,
    pub v: FactorConfig,
    #[serde(default, deserialize_with = "scalar_or_vec")]
    pub x0: Option<Vec<f64>>,
    /// Alternative singularity mode: `x0 = h * alpha` at every sweep
    /// spacing, so one offset (and one weight set) serves the whole sweep.
    #[serde(default, deserialize_with = "scalar_or_vec")]
    pub x0_alpha: Option<Vec<f64>>,
    pub h_sweep: SweepConfig,
    #[serde(default)]
    pub p: Option<u32>,
    #[serde(default)]
    pub oracle_tol: Option<f64>,
    #[serde(flatten)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub weights_file: Option<PathBuf>,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_md: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateJob {
    pub rule: RuleKind,
    pub n: usize,
    pub gamma: f64,
    pub kernel: KernelConfig,
    pub v: FactorConfig,
    #[serde(default, deserialize_with = "scalar_or_vec")]
    pub x0: Option<Vec<f64>>,
    pub h: f64,
    #[serde(default)]
    pub p: Option<u32>,
    #[serde(default)]
    pub weights_file: Option<PathBuf>,
    #[serde(flatten)]
    pub synthesis: SynthesisConfig,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))
}

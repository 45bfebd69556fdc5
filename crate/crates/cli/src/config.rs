//! Experiment configuration: JSON in, validated and resolved before any
//! numerical work starts.

use mwl::morse::{critical_points, CriticalPoint, PeriodicFunction, TAU};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spectrum,
    Morse,
    Trees,
    Product,
    Sweep,
    Verify,
    Wkb,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    /// Double-double, needed once `e^{-A/ħ}` drops below `1e-16`.
    #[default]
    Dd,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of collocation nodes; odd, at least 17.
    pub n: usize,
    #[serde(default)]
    pub precision: Precision,
}

/// `Σ cos[m] cos(mθ) + sin[m] sin(mθ)`.
#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FunctionSpec {
    pub fn to_function(&self) -> PeriodicFunction {
        PeriodicFunction::new(self.cos.clone(), self.sin.clone())
    }
}

/// Picks one critical point of a difference function.
#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(untagged, deny_unknown_fields)]
pub enum Selector {
    /// The `rank`-th critical point of Morse index `index`, counting
    /// counterclockwise from angle 0.
    Rank { index: usize, rank: usize },
    /// The unique critical point in `[window[0], window[1]]` (counterclockwise).
    Window { window: [f64; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(untagged, deny_unknown_fields)]
pub enum HbarSpec {
    List(Vec<f64>),
    /// `count` values evenly spaced from `from` to `to`, both included.
    Range { from: f64, to: f64, count: usize },
}

impl HbarSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            HbarSpec::List(v) => v.clone(),
            HbarSpec::Range { from, to, count } => match count {
                0 => vec![],
                1 => vec![*from],
                c => (0..*c).map(|i| from + (to - from) * i as f64 / (c - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_action_tol")]
    pub action: f64,
    #[serde(default = "default_power_tol")]
    pub power: f64,
}

fn default_action_tol() -> f64 {
    0.05
}

fn default_power_tol() -> f64 {
    0.2
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig { action: default_action_tol(), power: default_power_tol() }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report path; standard output when absent.
    pub json: Option<PathBuf>,
    /// Table path for `sweep`, `verify` and `spectrum` with Green pairs.
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LaplaceConfig {
    /// Taylor coefficients of the phase at its minimum 0.
    pub phase: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Expansion orders to evaluate.
    pub orders: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct WkbConfig {
    #[serde(default)]
    pub laplace: Option<LaplaceConfig>,
    /// Flow-line sample table `{t, f, psi_S, nu[, m]}`, relative to the config file.
    #[serde(default)]
    pub flow_line: Option<PathBuf>,
    /// Transport iterations after the leading term.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_iterations() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub grid: GridConfig,
    /// The sequence `f_0, …, f_k`. Spectral and Morse modes use `f_1 - f_0`,
    /// or `f_0` itself when it is the only entry.
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    /// Arity of the product; must equal `functions.len() - 1` when both are given.
    #[serde(default)]
    pub k: Option<usize>,
    /// One selector per pair `01, 12, …, (k-1)k, 0k`.
    #[serde(default)]
    pub q: Vec<Selector>,
    pub hbar: HbarSpec,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    /// Fit every tree topology separately in `verify`.
    #[serde(default)]
    pub tree_resolved: bool,
    /// Green-kernel sample pairs `(x, y)` for `spectrum`.
    #[serde(default)]
    pub green_pairs: Vec<[f64; 2]>,
    #[serde(default)]
    pub wkb: Option<WkbConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A configuration error, reported with the offending key path.
#[derive(Debug)]
pub struct SchemaError {
    pub path: String,
    pub msg: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.msg)
    }
}

fn schema_err(path: impl Into<String>, msg: impl Into<String>) -> SchemaError {
    SchemaError { path: path.into(), msg: msg.into() }
}

/// Applies `key.sub=value` overrides. The value is parsed as JSON and falls
/// back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), SchemaError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| schema_err(assignment, "expected key=value"))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| schema_err(key, format!("`{part}` is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| schema_err(key, format!("index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(schema_err(key, format!("`{part}` is inside a scalar"))),
        };
    }
    Ok(())
}

pub fn parse(value: Value) -> Result<ExperimentConfig, SchemaError> {
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema_err(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn schema() -> Value {
    serde_json::to_value(schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}

/// SHA-256 of the compact serialization of the resolved config.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), SchemaError> {
        let n = self.grid.n;
        if n < 17 || n % 2 == 0 {
            return Err(schema_err("grid.n", format!("need an odd n >= 17, got {n}")));
        }
        for (i, f) in self.functions.iter().enumerate() {
            if f.cos.iter().chain(&f.sin).any(|c| !c.is_finite()) {
                return Err(schema_err(format!("functions[{i}]"), "coefficients must be finite"));
            }
            if f.to_function().degree() >= n / 4 {
                return Err(schema_err(format!("functions[{i}]"), format!("degree too high for n = {n}")));
            }
        }
        let hs = self.hbar.values();
        if hs.is_empty() {
            return Err(schema_err("hbar", "need at least one value"));
        }
        if let Some(i) = hs.iter().position(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(schema_err(format!("hbar[{i}]"), "values must be positive"));
        }
        let needs_functions = !matches!(self.mode, Mode::Trees | Mode::Wkb);
        if needs_functions && self.functions.is_empty() {
            return Err(schema_err("functions", "the function list is empty"));
        }
        if let Some(k) = self.k {
            if k == 0 {
                return Err(schema_err("k", "need k >= 1"));
            }
            if !self.functions.is_empty() && self.functions.len() != k + 1 {
                return Err(schema_err("k", format!("k = {k} needs {} functions, got {}", k + 1, self.functions.len())));
            }
        }
        if matches!(self.mode, Mode::Product | Mode::Sweep | Mode::Verify) {
            if self.functions.len() < 2 {
                return Err(schema_err("functions", "products need at least two functions"));
            }
            if self.q.len() != self.functions.len() {
                return Err(schema_err("q", format!("need {} selectors, got {}", self.functions.len(), self.q.len())));
            }
        }
        if self.mode == Mode::Trees && self.k.is_none() && self.functions.len() < 2 {
            return Err(schema_err("k", "give k or a function sequence"));
        }
        if self.mode == Mode::Wkb {
            match &self.wkb {
                None => return Err(schema_err("wkb", "wkb mode needs a `wkb` section")),
                Some(w) if w.laplace.is_none() && w.flow_line.is_none() => {
                    return Err(schema_err("wkb", "give `laplace`, `flow_line` or both"))
                }
                _ => {}
            }
        }
        let t = self.tolerances.action;
        if !(t > 0.0) || !(self.tolerances.power > 0.0) {
            return Err(schema_err("tolerances", "tolerances must be positive"));
        }
        Ok(())
    }

    /// The pair label of selector `l`: `(l, l+1)` for leaves, `(0, k)` for the output.
    pub fn pair_of(&self, l: usize) -> (usize, usize) {
        let k = self.functions.len() - 1;
        if l < k {
            (l, l + 1)
        } else {
            (0, k)
        }
    }
}

/// Resolves one selector against the critical points of `f`.
pub fn select(f: &PeriodicFunction, sel: &Selector, path: &str) -> Result<CriticalPoint, SchemaError> {
    let crit = critical_points(f).map_err(|e| schema_err(path, e.to_string()))?;
    match sel {
        Selector::Rank { index, rank } => {
            let mut of: Vec<CriticalPoint> = crit.into_iter().filter(|c| c.index == *index).collect();
            of.sort_by(|a, b| a.theta.total_cmp(&b.theta));
            let len = of.len();
            of.get(*rank).copied().ok_or_else(|| schema_err(path, format!("rank {rank} of index {index}, only {len} such points")))
        }
        Selector::Window { window: [lo, hi] } => {
            let span = (hi - lo).rem_euclid(TAU);
            let inside: Vec<CriticalPoint> =
                crit.into_iter().filter(|c| (c.theta - lo).rem_euclid(TAU) <= span).collect();
            match inside.as_slice() {
                [one] => Ok(*one),
                other => Err(schema_err(path, format!("window holds {} critical points, need exactly one", other.len()))),
            }
        }
    }
}

//! Scenario-matrix configuration and scheme presets.
//!
//! Configs are TOML. A scheme either spells out every [`SchemeParams`] field
//! or names a `preset` and overrides some of them:
//!
//! ```toml
//! master_seed = 7
//! alphas = [0.5, 1.0]
//!
//! [[schemes]]
//! id = "kyber"
//! preset = "kyber"
//! sigma_idle = 150.0
//! ```
//!
//! Omitted top-level keys take the defaults documented on [`ScenarioMatrix`].

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DEFAULT_BINS;
use crate::rng::{effective_master_seed, scenario_seed};
use crate::scenario::{Environment, LeakModel, Scenario, SchemeParams};
use crate::scoring::TlriWeights;
use crate::sweep::DEFAULT_MIN_PREFIX;

/// Config shipped with the tool: three schemes, three environments, four
/// leak models plus the no-leak baseline, alpha = 1.
pub const PAPER_MATRIX: &str = include_str!("../presets/paper_matrix.toml");

pub const DEFAULT_N_TRACES: usize = 20_000;
pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;
pub const DEFAULT_ALPHAS: [f64; 1] = [1.0];

/// Built-in scheme presets.
///
/// Environment noise scales with the baseline B (drift is relative, the
/// additive terms are fixed fractions of B), while leakage costs are absolute
/// cycle counts: a cache miss or a slow divide costs the same whatever the
/// surrounding computation. Larger-B schemes therefore bury the same leak in
/// more noise. Frodo's large matrices are modelled with more memory accesses
/// and slow-operation opportunities, and its branch leak uses the
/// large-penalty shift.
pub mod presets {
    use super::SchemeParams;

    pub const NAMES: [&str; 3] = ["kyber", "saber", "frodo"];

    fn scaled(baseline: f64) -> SchemeParams {
        SchemeParams {
            baseline_cycles: baseline,
            sigma_dvfs: 0.003,
            sigma_idle: 0.004 * baseline,
            sigma_jitter: 0.012 * baseline,
            n_blocks: 64,
            exp_queue_mean: 0.01 * baseline,
            interrupt_prob: 0.05,
            exp_interrupt_mean: 0.2 * baseline,
            branch_delta: 125.0,
            memcmp_delta: SchemeParams::MEMCMP_RATIO * 125.0,
            big_branch_delta: 1_200.0,
            div_opportunities: 64,
            div_base_rate: 0.10,
            div_cost: 20.0,
            cache_accesses: 128,
            cache_base_miss: 0.08,
            cache_miss_shift: 0.04,
            cache_penalty: 30.0,
        }
    }

    pub fn kyber() -> SchemeParams {
        scaled(50_000.0)
    }

    pub fn saber() -> SchemeParams {
        scaled(65_000.0)
    }

    pub fn frodo() -> SchemeParams {
        SchemeParams {
            div_opportunities: 512,
            cache_accesses: 1_024,
            ..scaled(1_200_000.0)
        }
    }

    /// `(params, large_baseline)` for a preset name.
    pub fn by_name(name: &str) -> Option<(SchemeParams, bool)> {
        match name {
            "kyber" => Some((kyber(), false)),
            "saber" => Some((saber(), false)),
            "frodo" => Some((frodo(), true)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub id: String,
    pub large_baseline: bool,
    pub params: SchemeParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Grid spec, see [`crate::sweep::parse_grid`].
    pub grid: String,
    pub shuffle_seed: u64,
    pub min_prefix: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            grid: "default".into(),
            shuffle_seed: 0,
            min_prefix: DEFAULT_MIN_PREFIX,
        }
    }
}

/// A validated scenario matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMatrix {
    pub schemes: Vec<Scheme>,
    /// Default: all three.
    pub environments: Vec<Environment>,
    /// Leak models besides the always-present `none` baseline.
    /// Default: branch, memcmp_early, div_latency, cache_index.
    pub leak_models: Vec<LeakModel>,
    /// Default: `[1.0]`.
    pub alphas: Vec<f64>,
    /// Default: 20 000.
    pub n_traces: usize,
    pub master_seed: u64,
    /// Raw draws discarded from the master stream before scenario seeds are
    /// derived. Default 0.
    pub warmup: u64,
    /// Default: 64.
    pub bins: usize,
    pub weights: TlriWeights,
    /// Clip final timings at zero. Default: true.
    pub clipping: bool,
    pub sweep: SweepSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    schemes: Option<Vec<RawScheme>>,
    environments: Option<Vec<String>>,
    leak_models: Option<Vec<String>>,
    alphas: Option<Vec<f64>>,
    n_traces: Option<i64>,
    master_seed: Option<u64>,
    warmup: Option<u64>,
    bins: Option<i64>,
    weights: Option<TlriWeights>,
    clipping: Option<bool>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
struct RawScheme {
    id: Option<String>,
    preset: Option<String>,
    large_baseline: Option<bool>,
    #[serde(flatten)]
    params: toml::Table,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    grid: Option<String>,
    shuffle_seed: Option<u64>,
    min_prefix: Option<usize>,
}

fn param_names() -> Vec<String> {
    toml::Table::try_from(presets::kyber())
        .expect("SchemeParams serialises to a table")
        .keys()
        .cloned()
        .collect()
}

fn resolve_scheme(index: usize, raw: RawScheme, errors: &mut Vec<String>) -> Option<Scheme> {
    let label = raw.id.clone().unwrap_or_else(|| format!("#{index}"));
    let at = |msg: String| format!("schemes[{label}].{msg}");
    let Some(id) = raw.id.filter(|s| !s.is_empty()) else {
        errors.push(format!("schemes[{label}]: missing `id`"));
        return None;
    };

    let names = param_names();
    let mut ok = true;
    for key in raw.params.keys() {
        if !names.contains(key) {
            errors.push(at(format!("{key}: unknown key")));
            ok = false;
        }
    }

    let (mut table, preset_large) = match raw.preset.as_deref() {
        Some(name) => match presets::by_name(name) {
            Some((p, large)) => (toml::Table::try_from(p).expect("table"), large),
            None => {
                errors.push(at(format!(
                    "preset: unknown preset `{name}` (expected one of: {})",
                    presets::NAMES.join(", ")
                )));
                return None;
            }
        },
        None => (toml::Table::new(), false),
    };
    let explicit_memcmp = raw.params.contains_key("memcmp_delta");
    for (k, v) in raw.params {
        table.insert(k, v);
    }
    if !explicit_memcmp {
        if let Some(delta) = table
            .get("branch_delta")
            .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
        {
            table.insert(
                "memcmp_delta".into(),
                toml::Value::Float(SchemeParams::MEMCMP_RATIO * delta),
            );
        }
    }
    for name in &names {
        if !table.contains_key(name) {
            errors.push(at(format!("{name}: missing (set it or name a `preset`)")));
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    let params: SchemeParams = match toml::Value::Table(table).try_into() {
        Ok(p) => p,
        Err(e) => {
            errors.push(at(e.message().to_string()));
            return None;
        }
    };
    let before = errors.len();
    errors.extend(params.violations().into_iter().map(&at));
    if errors.len() > before {
        return None;
    }
    Some(Scheme {
        id,
        large_baseline: raw.large_baseline.unwrap_or(preset_large),
        params,
    })
}

fn parse_list<T: std::str::FromStr<Err = Error>>(
    key: &str,
    items: Vec<String>,
    errors: &mut Vec<String>,
) -> Vec<T> {
    items
        .into_iter()
        .filter_map(|s| match s.parse() {
            Ok(v) => Some(v),
            Err(Error::Config(msg)) => {
                errors.push(format!("{key}: {msg}"));
                None
            }
            Err(e) => {
                errors.push(format!("{key}: {e}"));
                None
            }
        })
        .collect()
}

impl ScenarioMatrix {
    /// Load from a file path, or from a bundled config name (`paper_matrix`)
    /// when no such file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return Self::from_toml_str(&text).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            });
        }
        match Self::bundled(&path.to_string_lossy()) {
            Some(text) => Self::from_toml_str(text),
            None => Err(Error::Config(format!(
                "config `{}` is neither a file nor a bundled config (bundled: paper_matrix)",
                path.display()
            ))),
        }
    }

    pub fn bundled(name: &str) -> Option<&'static str> {
        match name {
            "paper_matrix" | "paper_matrix.toml" => Some(PAPER_MATRIX),
            _ => None,
        }
    }

    pub fn paper_matrix() -> Self {
        Self::from_toml_str(PAPER_MATRIX).expect("bundled config is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawMatrix =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let mut errors = Vec::new();

        let schemes: Vec<Scheme> = match raw.schemes {
            Some(list) if !list.is_empty() => list
                .into_iter()
                .enumerate()
                .filter_map(|(i, s)| resolve_scheme(i, s, &mut errors))
                .collect(),
            _ => {
                errors.push("schemes: at least one scheme is required".into());
                Vec::new()
            }
        };
        let mut seen = BTreeSet::new();
        for s in &schemes {
            if !seen.insert(s.id.as_str()) {
                errors.push(format!("schemes: duplicate id `{}`", s.id));
            }
        }

        let environments = match raw.environments {
            Some(list) => parse_list::<Environment>("environments", list, &mut errors),
            None => Environment::ALL.to_vec(),
        };
        if environments.is_empty() {
            errors.push("environments: must not be empty".into());
        }
        let leak_models = match raw.leak_models {
            Some(list) => parse_list::<LeakModel>("leak_models", list, &mut errors),
            None => vec![
                LeakModel::Branch,
                LeakModel::MemcmpEarly,
                LeakModel::DivLatency,
                LeakModel::CacheIndex,
            ],
        };
        let mut leak_models_dedup = Vec::new();
        for m in leak_models {
            if m != LeakModel::None && !leak_models_dedup.contains(&m) {
                leak_models_dedup.push(m);
            }
        }

        let alphas = raw.alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
        if alphas.is_empty() {
            errors.push("alphas: must not be empty".into());
        }
        for a in &alphas {
            if !(a.is_finite() && *a >= 0.0) {
                errors.push(format!("alphas: {a} is not a finite nonnegative number"));
            }
        }

        let n_traces = raw.n_traces.unwrap_or(DEFAULT_N_TRACES as i64);
        if n_traces < 2 {
            errors.push(format!("n_traces: must be at least 2, got {n_traces}"));
        }
        let bins = raw.bins.unwrap_or(DEFAULT_BINS as i64);
        if bins < 2 {
            errors.push(format!("bins: must be at least 2, got {bins}"));
        }
        let weights = raw.weights.unwrap_or_default();
        errors.extend(weights.violations());

        let sweep = match raw.sweep {
            Some(s) => {
                let d = SweepSettings::default();
                SweepSettings {
                    grid: s.grid.unwrap_or(d.grid),
                    shuffle_seed: s.shuffle_seed.unwrap_or(d.shuffle_seed),
                    min_prefix: s.min_prefix.unwrap_or(d.min_prefix),
                }
            }
            None => SweepSettings::default(),
        };
        if n_traces >= 2 {
            if let Err(e) = crate::sweep::parse_grid(&sweep.grid, n_traces as usize) {
                errors.push(format!("sweep.grid: {e}"));
            }
        }

        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        Ok(ScenarioMatrix {
            schemes,
            environments,
            leak_models: leak_models_dedup,
            alphas,
            n_traces: n_traces as usize,
            master_seed: raw.master_seed.unwrap_or(DEFAULT_MASTER_SEED),
            warmup: raw.warmup.unwrap_or(0),
            bins: bins as usize,
            weights,
            clipping: raw.clipping.unwrap_or(true),
            sweep,
        })
    }

    pub fn scheme(&self, id: &str) -> Option<&Scheme> {
        self.schemes.iter().find(|s| s.id == id)
    }

    /// Master seed after the optional warm-up.
    pub fn effective_master_seed(&self) -> u64 {
        effective_master_seed(self.master_seed, self.warmup)
    }

    /// Seeded scenario for one cell of the matrix.
    pub fn scenario(
        &self,
        scheme_id: &str,
        environment: Environment,
        leak_model: LeakModel,
        alpha: f64,
    ) -> Result<Scenario> {
        let alpha = if leak_model == LeakModel::None {
            0.0
        } else {
            alpha
        };
        let seed = scenario_seed(
            self.effective_master_seed(),
            scheme_id,
            environment,
            leak_model,
            alpha,
        );
        Scenario::new(
            scheme_id,
            environment,
            leak_model,
            alpha,
            self.n_traces,
            seed,
        )
    }

    /// Run set in scheme, environment, leak, alpha order. The `none` baseline
    /// appears once per (scheme, environment), with alpha 0.
    pub fn expand(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for scheme in &self.schemes {
            for &env in &self.environments {
                out.push(
                    self.scenario(&scheme.id, env, LeakModel::None, 0.0)
                        .expect("validated matrix"),
                );
                for &leak in &self.leak_models {
                    for &alpha in &self.alphas {
                        out.push(
                            self.scenario(&scheme.id, env, leak, alpha)
                                .expect("validated matrix"),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Scenarios matching `scheme/env/leak/alpha`, where any part may be `*`.
pub fn select(scenarios: &[Scenario], selector: &str) -> Result<Vec<Scenario>> {
    let parts: Vec<&str> = selector.split('/').collect();
    let [scheme, env, leak, alpha] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "selector `{selector}` must have the form scheme/env/leak/alpha (`*` allowed)"
        )));
    };
    let alpha = match *alpha {
        "*" => None,
        a => Some(
            a.parse::<f64>()
                .map_err(|_| Error::Config(format!("selector alpha `{a}` is not a number")))?,
        ),
    };
    Ok(scenarios
        .iter()
        .filter(|s| *scheme == "*" || s.scheme_id == *scheme)
        .filter(|s| *env == "*" || s.environment.as_str() == *env)
        .filter(|s| *leak == "*" || s.leak_model.as_str() == *leak)
        .filter(|s| alpha.is_none_or(|a| s.alpha == a))
        .cloned()
        .collect())
}

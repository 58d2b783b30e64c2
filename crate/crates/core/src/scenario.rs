//! Scenario algebra and the trace data model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// External noise and contention regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Idle,
    Jitter,
    Loaded,
}

impl Environment {
    pub const ALL: [Environment; 3] = [Environment::Idle, Environment::Jitter, Environment::Loaded];

    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Idle => "idle",
            Environment::Jitter => "jitter",
            Environment::Loaded => "loaded",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Environment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Environment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown environment `{s}` (expected one of: idle, jitter, loaded)"
                ))
            })
    }
}

/// Shape of the secret-dependent timing modulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakModel {
    None,
    Branch,
    MemcmpEarly,
    DivLatency,
    CacheIndex,
    BigBranch,
}

impl LeakModel {
    pub const ALL: [LeakModel; 6] = [
        LeakModel::None,
        LeakModel::Branch,
        LeakModel::MemcmpEarly,
        LeakModel::DivLatency,
        LeakModel::CacheIndex,
        LeakModel::BigBranch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LeakModel::None => "none",
            LeakModel::Branch => "branch",
            LeakModel::MemcmpEarly => "memcmp_early",
            LeakModel::DivLatency => "div_latency",
            LeakModel::CacheIndex => "cache_index",
            LeakModel::BigBranch => "big_branch",
        }
    }

    /// The operator actually applied for a scheme. Branch leakage on a
    /// large-baseline scheme is modelled with the large-penalty shift.
    pub fn resolve(self, large_baseline: bool) -> LeakModel {
        match self {
            LeakModel::Branch if large_baseline => LeakModel::BigBranch,
            other => other,
        }
    }
}

impl fmt::Display for LeakModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LeakModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LeakModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown leak model `{s}` (expected one of: none, branch, memcmp_early, \
                     div_latency, cache_index, big_branch)"
                ))
            })
    }
}

/// One experimental unit: scheme, environment, leak model and strength.
///
/// `seed` is the per-scenario stream seed, already mixed from the master
/// seed and the scenario identity (see [`crate::rng::scenario_seed`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scheme_id: String,
    pub environment: Environment,
    pub leak_model: LeakModel,
    pub alpha: f64,
    pub n_traces: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        scheme_id: impl Into<String>,
        environment: Environment,
        leak_model: LeakModel,
        alpha: f64,
        n_traces: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::parameter(
                "alpha",
                format!("must be finite and >= 0, got {alpha}"),
            ));
        }
        if n_traces < 2 {
            return Err(Error::parameter(
                "n_traces",
                format!("must be at least 2, got {n_traces}"),
            ));
        }
        Ok(Scenario {
            scheme_id: scheme_id.into(),
            environment,
            leak_model,
            alpha,
            n_traces,
            seed,
        })
    }

    /// Leak strength as applied: zero when there is no leak model.
    pub fn effective_alpha(&self) -> f64 {
        if self.leak_model == LeakModel::None {
            0.0
        } else {
            self.alpha
        }
    }

    /// `scheme/env/leak/alpha`, the selector form.
    pub fn id(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.scheme_id, self.environment, self.leak_model, self.alpha
        )
    }

    /// Identifier safe for use in file names.
    pub fn file_id(&self) -> String {
        let alpha = self.alpha.to_string().replace('.', "p");
        format!(
            "{}_{}_{}_a{}",
            self.scheme_id, self.environment, self.leak_model, alpha
        )
    }
}

/// Shape parameters of one scheme preset. All cycle quantities are in cycles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Baseline execution cost B.
    pub baseline_cycles: f64,
    /// Relative DVFS drift standard deviation (dimensionless).
    pub sigma_dvfs: f64,
    pub sigma_idle: f64,
    /// Total jitter standard deviation, spread across `n_blocks` blocks.
    pub sigma_jitter: f64,
    pub n_blocks: u32,
    pub exp_queue_mean: f64,
    pub interrupt_prob: f64,
    pub exp_interrupt_mean: f64,
    pub branch_delta: f64,
    pub memcmp_delta: f64,
    pub big_branch_delta: f64,
    pub div_opportunities: u64,
    pub div_base_rate: f64,
    pub div_cost: f64,
    pub cache_accesses: u64,
    pub cache_base_miss: f64,
    pub cache_miss_shift: f64,
    pub cache_penalty: f64,
}

impl SchemeParams {
    /// Ratio of the early-exit comparison shift to the branch shift when a
    /// preset does not set `memcmp_delta` explicitly.
    pub const MEMCMP_RATIO: f64 = 0.6;

    /// Every violated invariant, as `field: reason` strings.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("baseline_cycles", self.baseline_cycles),
            ("sigma_dvfs", self.sigma_dvfs),
            ("sigma_idle", self.sigma_idle),
            ("sigma_jitter", self.sigma_jitter),
            ("exp_queue_mean", self.exp_queue_mean),
            ("exp_interrupt_mean", self.exp_interrupt_mean),
            ("branch_delta", self.branch_delta),
            ("memcmp_delta", self.memcmp_delta),
            ("big_branch_delta", self.big_branch_delta),
            ("div_cost", self.div_cost),
            ("cache_penalty", self.cache_penalty),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name}: must be finite and > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.interrupt_prob) {
            out.push(format!(
                "interrupt_prob: must lie in [0, 1], got {}",
                self.interrupt_prob
            ));
        }
        let open_unit = [
            ("div_base_rate", self.div_base_rate),
            ("cache_base_miss", self.cache_base_miss),
            ("cache_miss_shift", self.cache_miss_shift),
        ];
        for (name, v) in open_unit {
            if !(v > 0.0 && v < 1.0) {
                out.push(format!("{name}: must lie in (0, 1), got {v}"));
            }
        }
        let counts = [
            ("n_blocks", u64::from(self.n_blocks)),
            ("div_opportunities", self.div_opportunities),
            ("cache_accesses", self.cache_accesses),
        ];
        for (name, v) in counts {
            if v == 0 {
                out.push(format!("{name}: must be a positive integer"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Labelled timings of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    secrets: Vec<u8>,
    timings: Vec<f64>,
}

impl TraceSet {
    pub fn new(secrets: Vec<u8>, timings: Vec<f64>) -> Result<Self> {
        if secrets.len() != timings.len() {
            return Err(Error::parameter(
                "traces",
                format!(
                    "{} secret labels but {} timings",
                    secrets.len(),
                    timings.len()
                ),
            ));
        }
        if let Some(bad) = secrets.iter().find(|&&s| s > 1) {
            return Err(Error::parameter(
                "secrets",
                format!("labels must be 0 or 1, found {bad}"),
            ));
        }
        if let Some(bad) = timings.iter().find(|t| !t.is_finite()) {
            return Err(Error::parameter(
                "timings",
                format!("timings must be finite, found {bad}"),
            ));
        }
        Ok(TraceSet { secrets, timings })
    }

    pub fn secrets(&self) -> &[u8] {
        &self.secrets
    }

    pub fn timings(&self) -> &[f64] {
        &self.timings
    }

    pub fn len(&self) -> usize {
        self.secrets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secrets.is_empty()
    }

    /// Traces `0..n`, keeping labels and timings paired.
    pub fn prefix(&self, n: usize) -> TraceSet {
        let n = n.min(self.len());
        TraceSet {
            secrets: self.secrets[..n].to_vec(),
            timings: self.timings[..n].to_vec(),
        }
    }

    /// Apply `f` to every timing; labels are untouched.
    pub fn map_timings(&self, f: impl Fn(f64) -> f64) -> Result<TraceSet> {
        TraceSet::new(
            self.secrets.clone(),
            self.timings.iter().map(|&t| f(t)).collect(),
        )
    }

    pub fn into_parts(self) -> (Vec<u8>, Vec<f64>) {
        (self.secrets, self.timings)
    }
}

/// Split timings by secret label, preserving trace order within each class.
pub fn partition(traces: &TraceSet) -> (Vec<f64>, Vec<f64>) {
    let mut sample_0 = Vec::new();
    let mut sample_1 = Vec::new();
    for (&s, &t) in traces.secrets.iter().zip(&traces.timings) {
        if s == 0 {
            sample_0.push(t);
        } else {
            sample_1.push(t);
        }
    }
    (sample_0, sample_1)
}

//! Result files: `results.csv`, `results.json`, `summary.csv`,
//! `traces_<id>.csv` and `sweep_<id>.csv`.
//!
//! CSV files use `.` decimals, shortest round-trip float formatting, a header
//! row and LF line endings. Nothing time- or host-dependent is written, so
//! identical inputs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioMatrix;
use crate::environment;
use crate::error::{Error, Result};
use crate::leakage;
use crate::rng::GENERATOR_NAME;
use crate::runner::{MatrixRun, ScenarioFailure, ScenarioResult};
use crate::scenario::{Scenario, TraceSet};
use crate::scoring::SNR_SENTINEL;
use crate::simulate::SECRET_P;
use crate::sweep::{SweepCurve, SweepOutcome};
use crate::{TOOL_NAME, TOOL_VERSION};

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const SUMMARY_CSV: &str = "summary.csv";

/// One `results.csv` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub env: String,
    pub leak: String,
    pub alpha: f64,
    pub n: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub std0: f64,
    pub std1: f64,
    pub pooled_std: f64,
    pub welch_t: f64,
    pub ks_d: f64,
    pub cliff_delta: f64,
    pub mi_bits: f64,
    pub overlap: f64,
    pub snr: f64,
    pub raw: f64,
    pub tlri: f64,
    pub seed: u64,
}

impl From<&ScenarioResult> for ResultRow {
    fn from(r: &ScenarioResult) -> Self {
        let s = &r.scenario;
        let m = &r.report;
        ResultRow {
            scheme: s.scheme_id.clone(),
            env: s.environment.to_string(),
            leak: s.leak_model.to_string(),
            alpha: s.alpha,
            n: m.n_0 + m.n_1,
            mean0: m.mean_0,
            mean1: m.mean_1,
            std0: m.std_0,
            std1: m.std_1,
            pooled_std: m.pooled_std,
            welch_t: m.welch_t,
            ks_d: m.ks_d,
            cliff_delta: m.cliff_delta,
            mi_bits: m.mi_bits,
            overlap: m.overlap,
            snr: m.snr,
            raw: m.raw_score,
            tlri: m.tlri,
            seed: s.seed,
        }
    }
}

impl ResultRow {
    pub fn id(&self) -> String {
        format!("{}/{}/{}/{}", self.scheme, self.env, self.leak, self.alpha)
    }
}

/// One `summary.csv` row: no-leak baseline against the worst leak of a
/// (scheme, environment) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub env: String,
    pub base_tlri: Option<f64>,
    pub worst_leak: Option<String>,
    pub worst_alpha: Option<f64>,
    pub worst_tlri: Option<f64>,
    pub delta_tlri: Option<f64>,
}

/// Group rows by (scheme, env) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    for row in rows {
        let idx = match out
            .iter()
            .position(|s| s.scheme == row.scheme && s.env == row.env)
        {
            Some(i) => i,
            None => {
                out.push(SummaryRow {
                    scheme: row.scheme.clone(),
                    env: row.env.clone(),
                    base_tlri: None,
                    worst_leak: None,
                    worst_alpha: None,
                    worst_tlri: None,
                    delta_tlri: None,
                });
                out.len() - 1
            }
        };
        let entry = &mut out[idx];
        if row.leak == "none" {
            entry.base_tlri = Some(row.tlri);
        } else if entry.worst_tlri.is_none_or(|w| row.tlri > w) {
            entry.worst_tlri = Some(row.tlri);
            entry.worst_leak = Some(row.leak.clone());
            entry.worst_alpha = Some(row.alpha);
        }
    }
    for s in &mut out {
        if let (Some(b), Some(w)) = (s.base_tlri, s.worst_tlri) {
            s.delta_tlri = Some(w - b);
        }
    }
    out
}

/// Leak rows sorted by TLRI, highest first; ties keep file order.
pub fn top_k(rows: &[ResultRow], k: usize) -> Vec<&ResultRow> {
    let mut ranked: Vec<&ResultRow> = rows.iter().filter(|r| r.leak != "none").collect();
    ranked.sort_by(|a, b| b.tlri.total_cmp(&a.tlri));
    ranked.truncate(k);
    ranked
}

#[derive(Clone, Debug, Serialize)]
struct ModelConstants {
    secret_p: f64,
    jitter_drift_scale: f64,
    loaded_drift_scale: f64,
    loaded_noise_scale: f64,
    div_rate_up: f64,
    div_rate_down: f64,
    div_cost_noise: f64,
    cache_penalty_noise: f64,
    snr_sentinel: f64,
    normal_parameter: &'static str,
    exponential_parameter: &'static str,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            secret_p: SECRET_P,
            jitter_drift_scale: environment::JITTER_DRIFT_SCALE,
            loaded_drift_scale: environment::LOADED_DRIFT_SCALE,
            loaded_noise_scale: environment::LOADED_NOISE_SCALE,
            div_rate_up: leakage::DIV_RATE_UP,
            div_rate_down: leakage::DIV_RATE_DOWN,
            div_cost_noise: leakage::DIV_COST_NOISE,
            cache_penalty_noise: leakage::CACHE_PENALTY_NOISE,
            snr_sentinel: SNR_SENTINEL,
            normal_parameter: "standard deviation",
            exponential_parameter: "mean",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    generator: &'static str,
    seed_mixing: &'static str,
    master_seed: u64,
    seed_overridden: bool,
    warmup: u64,
    warmup_scope: &'static str,
    effective_master_seed: u64,
    n_traces: usize,
    bins: usize,
    binning: &'static str,
    clipping: bool,
    weights: &'a crate::scoring::TlriWeights,
    alphas: &'a [f64],
    environments: &'a [crate::Environment],
    leak_models: &'a [crate::LeakModel],
    schemes: &'a [crate::Scheme],
    model_constants: ModelConstants,
}

#[derive(Clone, Debug, Serialize)]
struct ScenarioEntry<'a> {
    id: String,
    scheme: &'a str,
    env: crate::Environment,
    leak: crate::LeakModel,
    effective_leak: crate::LeakModel,
    alpha: f64,
    seed: u64,
    rates_clamped: bool,
    report: &'a crate::MetricReport,
}

#[derive(Clone, Debug, Serialize)]
struct ResultsDocument<'a> {
    metadata: Metadata<'a>,
    scenarios: Vec<ScenarioEntry<'a>>,
    failures: &'a [ScenarioFailure],
}

fn check_target(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        Err(Error::WouldOverwrite(path.to_path_buf()))
    } else {
        Ok(())
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WrittenFiles {
    pub results_csv: PathBuf,
    pub results_json: PathBuf,
    pub summary_csv: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Write every result file for a matrix run into `dir`. Fails without
/// touching anything if a target exists and `force` is not set.
pub fn write_results(
    dir: &Path,
    matrix: &ScenarioMatrix,
    run: &MatrixRun,
    seed_overridden: bool,
    force: bool,
) -> Result<WrittenFiles> {
    if run.results.is_empty() {
        return Err(Error::Config("no successful scenarios to write".into()));
    }
    let results_csv = dir.join(RESULTS_CSV);
    let results_json = dir.join(RESULTS_JSON);
    let summary_csv = dir.join(SUMMARY_CSV);
    let trace_paths: Vec<PathBuf> = run
        .traces
        .iter()
        .map(|(s, _)| dir.join(traces_file_name(s)))
        .collect();
    for p in [&results_csv, &results_json, &summary_csv]
        .into_iter()
        .chain(&trace_paths)
    {
        check_target(p, force)?;
    }
    ensure_dir(dir)?;

    let rows: Vec<ResultRow> = run.results.iter().map(ResultRow::from).collect();
    write_rows(&results_csv, &rows)?;
    write_rows(&summary_csv, summarize(&rows))?;

    let doc = ResultsDocument {
        metadata: Metadata {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            generator: GENERATOR_NAME,
            seed_mixing:
                "splitmix64(master ^ fnv1a64(scheme 0x1f env 0x1f leak 0x1f alpha_le_bits))",
            master_seed: matrix.master_seed,
            seed_overridden,
            warmup: matrix.warmup,
            warmup_scope: "master stream, before scenario seed derivation",
            effective_master_seed: matrix.effective_master_seed(),
            n_traces: matrix.n_traces,
            bins: matrix.bins,
            binning: "equal-width over pooled min..max",
            clipping: matrix.clipping,
            weights: &matrix.weights,
            alphas: &matrix.alphas,
            environments: &matrix.environments,
            leak_models: &matrix.leak_models,
            schemes: &matrix.schemes,
            model_constants: ModelConstants::default(),
        },
        scenarios: run
            .results
            .iter()
            .map(|r| ScenarioEntry {
                id: r.scenario.id(),
                scheme: &r.scenario.scheme_id,
                env: r.scenario.environment,
                leak: r.scenario.leak_model,
                effective_leak: r.effective_leak,
                alpha: r.scenario.alpha,
                seed: r.scenario.seed,
                rates_clamped: r.rates_clamped,
                report: &r.report,
            })
            .collect(),
        failures: &run.failures,
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    fs::write(&results_json, json).map_err(|e| Error::io(&results_json, e))?;

    for ((_, traces), path) in run.traces.iter().zip(&trace_paths) {
        write_trace_rows(path, traces)?;
    }

    Ok(WrittenFiles {
        results_csv,
        results_json,
        summary_csv,
        traces: trace_paths,
    })
}

pub fn traces_file_name(scenario: &Scenario) -> String {
    format!("traces_{}.csv", scenario.file_id())
}

pub fn sweep_file_name(scenario: &Scenario) -> String {
    format!("sweep_{}.csv", scenario.file_id())
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    secret: u8,
    timing: f64,
}

fn write_trace_rows(path: &Path, traces: &TraceSet) -> Result<()> {
    write_rows(
        path,
        traces
            .secrets()
            .iter()
            .zip(traces.timings())
            .map(|(&secret, &timing)| TraceRow { secret, timing }),
    )
}

/// `traces_<id>.csv` with columns `secret,timing`.
pub fn write_traces(
    dir: &Path,
    scenario: &Scenario,
    traces: &TraceSet,
    force: bool,
) -> Result<PathBuf> {
    let path = dir.join(traces_file_name(scenario));
    check_target(&path, force)?;
    ensure_dir(dir)?;
    write_trace_rows(&path, traces)?;
    Ok(path)
}

pub fn read_traces(path: &Path) -> Result<TraceSet> {
    let mut r = csv::Reader::from_path(path)?;
    let mut secrets = Vec::new();
    let mut timings = Vec::new();
    for row in r.deserialize::<TraceRow>() {
        let row = row?;
        secrets.push(row.secret);
        timings.push(row.timing);
    }
    TraceSet::new(secrets, timings)
}

/// One `sweep_<id>.csv` row. Metric cells are empty for skipped prefixes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prefix_n: usize,
    pub n0: Option<usize>,
    pub n1: Option<usize>,
    pub mean0: Option<f64>,
    pub mean1: Option<f64>,
    pub std0: Option<f64>,
    pub std1: Option<f64>,
    pub pooled_std: Option<f64>,
    pub welch_t: Option<f64>,
    pub ks_d: Option<f64>,
    pub cliff_delta: Option<f64>,
    pub mi_bits: Option<f64>,
    pub overlap: Option<f64>,
    pub snr: Option<f64>,
    pub raw: Option<f64>,
    pub tlri: Option<f64>,
    pub skip_reason: Option<String>,
}

impl SweepRow {
    fn from_point(prefix_n: usize, outcome: &SweepOutcome) -> Self {
        match outcome {
            SweepOutcome::Report(m) => SweepRow {
                prefix_n,
                n0: Some(m.n_0),
                n1: Some(m.n_1),
                mean0: Some(m.mean_0),
                mean1: Some(m.mean_1),
                std0: Some(m.std_0),
                std1: Some(m.std_1),
                pooled_std: Some(m.pooled_std),
                welch_t: Some(m.welch_t),
                ks_d: Some(m.ks_d),
                cliff_delta: Some(m.cliff_delta),
                mi_bits: Some(m.mi_bits),
                overlap: Some(m.overlap),
                snr: Some(m.snr),
                raw: Some(m.raw_score),
                tlri: Some(m.tlri),
                skip_reason: None,
            },
            SweepOutcome::Skipped(reason) => SweepRow {
                prefix_n,
                n0: None,
                n1: None,
                mean0: None,
                mean1: None,
                std0: None,
                std1: None,
                pooled_std: None,
                welch_t: None,
                ks_d: None,
                cliff_delta: None,
                mi_bits: None,
                overlap: None,
                snr: None,
                raw: None,
                tlri: None,
                skip_reason: Some(reason.clone()),
            },
        }
    }
}

pub fn write_sweep(
    dir: &Path,
    scenario: &Scenario,
    curve: &SweepCurve,
    force: bool,
) -> Result<PathBuf> {
    let path = dir.join(sweep_file_name(scenario));
    check_target(&path, force)?;
    ensure_dir(dir)?;
    write_rows(
        &path,
        curve
            .points
            .iter()
            .map(|p| SweepRow::from_point(p.prefix_n, &p.outcome)),
    )?;
    Ok(path)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_rows(path)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_rows(path)
}

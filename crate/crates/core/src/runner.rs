//! Matrix execution: generate, measure and score every scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioMatrix;
use crate::error::{Error, Result};
use crate::report::MetricReport;
use crate::scenario::{LeakModel, Scenario, TraceSet};
use crate::simulate;
use crate::sweep::{self, SweepCurve, SweepOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub effective_leak: LeakModel,
    pub rates_clamped: bool,
    pub report: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFailure {
    pub scenario: Scenario,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct MatrixRun {
    /// Successful scenarios in matrix order.
    pub results: Vec<ScenarioResult>,
    pub failures: Vec<ScenarioFailure>,
    /// Generated traces in matrix order, when requested.
    pub traces: Vec<(Scenario, TraceSet)>,
}

/// Generate the traces of one scenario of `matrix`.
pub fn generate_traces(
    matrix: &ScenarioMatrix,
    scenario: &Scenario,
) -> Result<simulate::Generated> {
    let scheme = matrix.scheme(&scenario.scheme_id).ok_or_else(|| {
        Error::Config(format!(
            "scenario references unknown scheme `{}`",
            scenario.scheme_id
        ))
    })?;
    simulate::generate(
        scenario,
        &scheme.params,
        scheme.large_baseline,
        matrix.clipping,
    )
}

pub fn run_scenario(
    matrix: &ScenarioMatrix,
    scenario: &Scenario,
) -> Result<(ScenarioResult, TraceSet)> {
    let generated = generate_traces(matrix, scenario).map_err(|e| e.in_scenario(scenario.id()))?;
    let report = MetricReport::compute(&generated.traces, matrix.bins, &matrix.weights)
        .map_err(|e| e.in_scenario(scenario.id()))?;
    Ok((
        ScenarioResult {
            scenario: scenario.clone(),
            effective_leak: generated.effective_leak,
            rates_clamped: generated.rates_clamped,
            report,
        },
        generated.traces,
    ))
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Run `f` on a dedicated pool of `parallelism` workers.
pub fn with_workers<R: Send>(parallelism: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(pool(parallelism)?.install(f))
}

/// Run `scenarios` on `parallelism` workers. Output order follows the input
/// order whatever the completion order; a failing scenario is recorded and
/// does not stop the others.
pub fn run_scenarios(
    matrix: &ScenarioMatrix,
    scenarios: &[Scenario],
    parallelism: usize,
    keep_traces: bool,
) -> Result<MatrixRun> {
    let outcomes: Vec<Result<(ScenarioResult, TraceSet)>> = pool(parallelism)?.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_scenario(matrix, s))
            .collect()
    });
    let mut run = MatrixRun::default();
    for (scenario, outcome) in scenarios.iter().zip(outcomes) {
        match outcome {
            Ok((result, traces)) => {
                if keep_traces {
                    run.traces.push((scenario.clone(), traces));
                }
                run.results.push(result);
            }
            Err(e) => run.failures.push(ScenarioFailure {
                scenario: scenario.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok(run)
}

pub fn run_matrix(
    matrix: &ScenarioMatrix,
    parallelism: usize,
    keep_traces: bool,
) -> Result<MatrixRun> {
    run_scenarios(matrix, &matrix.expand(), parallelism, keep_traces)
}

/// Sweep one scenario using the matrix's sweep settings unless `grid_spec`
/// or `shuffle_seed` override them.
pub fn sweep_scenario(
    matrix: &ScenarioMatrix,
    scenario: &Scenario,
    grid_spec: Option<&str>,
    shuffle_seed: Option<u64>,
) -> Result<SweepCurve> {
    let generated = generate_traces(matrix, scenario)?;
    let grid = sweep::parse_grid(grid_spec.unwrap_or(&matrix.sweep.grid), scenario.n_traces)?;
    sweep::run_sweep(
        &generated.traces,
        &grid,
        shuffle_seed.unwrap_or(matrix.sweep.shuffle_seed),
        &SweepOptions {
            bins: matrix.bins,
            min_prefix: matrix.sweep.min_prefix,
            weights: matrix.weights,
        },
    )
    .map_err(|e| e.in_scenario(scenario.id()))
}

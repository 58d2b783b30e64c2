//! Sample-size sweeps: the full metric pipeline recomputed on growing
//! prefixes of one shuffled trace set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::MetricReport;
use crate::rng::DeterministicRng;
use crate::scenario::{partition, TraceSet};
use crate::scoring::TlriWeights;

/// Smallest prefix a sweep grid may start at.
pub const DEFAULT_MIN_PREFIX: usize = 200;
/// Points in the default log-spaced grid.
pub const DEFAULT_GRID_POINTS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutcome {
    Report(MetricReport),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub prefix_n: usize,
    pub outcome: SweepOutcome,
}

impl SweepPoint {
    pub fn report(&self) -> Option<&MetricReport> {
        match &self.outcome {
            SweepOutcome::Report(r) => Some(r),
            SweepOutcome::Skipped(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
    pub shuffle_seed: u64,
}

/// `count` log-spaced integers from `start` to `end` inclusive, rounded and
/// deduplicated.
pub fn log_grid(start: usize, end: usize, count: usize) -> Vec<usize> {
    if count <= 1 || start >= end {
        return vec![end];
    }
    let (a, b) = ((start as f64).ln(), (end as f64).ln());
    let mut grid: Vec<usize> = (0..count)
        .map(|k| {
            let x = a + (b - a) * k as f64 / (count - 1) as f64;
            x.exp().round() as usize
        })
        .collect();
    grid[0] = start;
    grid[count - 1] = end;
    grid.dedup();
    grid
}

pub fn linear_grid(start: usize, end: usize, count: usize) -> Vec<usize> {
    if count <= 1 || start >= end {
        return vec![end];
    }
    let mut grid: Vec<usize> = (0..count)
        .map(|k| {
            let x = start as f64 + (end - start) as f64 * k as f64 / (count - 1) as f64;
            x.round() as usize
        })
        .collect();
    grid.dedup();
    grid
}

/// Default grid for `n` traces: 12 log-spaced points from `max(200, n/100)` to `n`.
pub fn default_grid(n: usize) -> Vec<usize> {
    log_grid(
        DEFAULT_MIN_PREFIX.max(n / 100).min(n),
        n,
        DEFAULT_GRID_POINTS,
    )
}

/// Parse a grid spec for `n` traces.
///
/// Accepted forms: `start:end:logK`, `start:end:linK`, a comma-separated list
/// (`500,1000,5000`), or `default`. `end` may be `max` for `n`.
pub fn parse_grid(spec: &str, n: usize) -> Result<Vec<usize>> {
    let spec = spec.trim();
    if spec == "default" {
        return Ok(default_grid(n));
    }
    let bad = |why: &str| Error::Config(format!("invalid grid spec `{spec}`: {why}"));
    let num = |s: &str| -> Result<usize> {
        let s = s.trim();
        if s == "max" {
            return Ok(n);
        }
        s.parse::<usize>()
            .map_err(|_| bad(&format!("`{s}` is not a positive integer")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, end, kind] => {
            let (start, end) = (num(start)?, num(end)?);
            type Spacing = fn(usize, usize, usize) -> Vec<usize>;
            let (ctor, count): (Spacing, &str) = if let Some(k) = kind.strip_prefix("log") {
                (log_grid, k)
            } else if let Some(k) = kind.strip_prefix("lin") {
                (linear_grid, k)
            } else {
                return Err(bad("spacing must be logK or linK"));
            };
            let count: usize = count
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| bad("point count must be a positive integer"))?;
            if start > end {
                return Err(bad("start exceeds end"));
            }
            Ok(ctor(start, end, count))
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(bad("expected start:end:logK, start:end:linK or a list")),
    }
}

fn validate_grid(grid: &[usize], n: usize, min_prefix: usize) -> Result<()> {
    let Some(&first) = grid.first() else {
        return Err(Error::Config("sweep grid is empty".into()));
    };
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config(format!(
            "sweep grid must be strictly increasing: {grid:?}"
        )));
    }
    if first < min_prefix {
        return Err(Error::Config(format!(
            "sweep grid starts at {first}, below the minimum prefix {min_prefix}"
        )));
    }
    let last = *grid.last().expect("nonempty");
    if last > n {
        return Err(Error::Config(format!(
            "sweep grid reaches {last} but only {n} traces are available"
        )));
    }
    Ok(())
}

/// Fisher–Yates shuffle of `(secret, timing)` pairs under `seed`.
pub fn shuffle(traces: &TraceSet, seed: u64) -> TraceSet {
    let (mut secrets, mut timings) = traces.clone().into_parts();
    let mut rng = DeterministicRng::from_seed(seed);
    for i in (1..secrets.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        secrets.swap(i, j);
        timings.swap(i, j);
    }
    TraceSet::new(secrets, timings).expect("a permutation of a valid trace set is valid")
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub bins: usize,
    pub min_prefix: usize,
    pub weights: TlriWeights,
}

/// Shuffle once, then report on each prefix in `grid`. A prefix whose smaller
/// class has fewer than two traces becomes a skipped point.
pub fn run_sweep(
    traces: &TraceSet,
    grid: &[usize],
    shuffle_seed: u64,
    options: &SweepOptions,
) -> Result<SweepCurve> {
    validate_grid(grid, traces.len(), options.min_prefix)?;
    let shuffled = shuffle(traces, shuffle_seed);
    let points = grid
        .par_iter()
        .map(|&n| {
            let prefix = shuffled.prefix(n);
            let (a, b) = partition(&prefix);
            let outcome = if a.len() < 2 || b.len() < 2 {
                SweepOutcome::Skipped(format!(
                    "class sizes {} / {} (need at least 2 each)",
                    a.len(),
                    b.len()
                ))
            } else {
                SweepOutcome::Report(MetricReport::compute(
                    &prefix,
                    options.bins,
                    &options.weights,
                )?)
            };
            Ok(SweepPoint {
                prefix_n: n,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        points,
        shuffle_seed,
    })
}

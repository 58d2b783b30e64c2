//! Acceptance checks, one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tlri_core::config::{presets, select, ScenarioMatrix, DEFAULT_MASTER_SEED};
use tlri_core::metrics;
use tlri_core::rng::DeterministicRng;
use tlri_core::runner::{self, MatrixRun};
use tlri_core::sweep::{self, SweepOptions};
use tlri_core::{partition, simulate, Environment, LeakModel, MetricReport, Scenario};

type Outcome = Result<String, String>;

const SEEDS: u64 = 10;
const NEEDED: usize = 9;

fn seeds() -> impl Iterator<Item = u64> {
    (0..SEEDS).map(|k| DEFAULT_MASTER_SEED + k)
}

fn run(matrix: &ScenarioMatrix) -> MatrixRun {
    let run = runner::run_matrix(matrix, 8, false).expect("matrix run");
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    run
}

fn tlri_by_id(run: &MatrixRun) -> BTreeMap<String, f64> {
    run.results
        .iter()
        .map(|r| (r.scenario.id(), r.report.tlri))
        .collect()
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {took:.1?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn floor() -> Outcome {
    let started = Instant::now();
    let matrix = ScenarioMatrix::paper_matrix();
    let baselines = select(&matrix.expand(), "*/*/none/*").map_err(|e| e.to_string())?;
    let run = runner::run_scenarios(&matrix, &baselines, 8, false).map_err(|e| e.to_string())?;
    within(Duration::from_secs(10), started)?;
    if run.results.len() != 9 {
        return Err(format!(
            "{} baseline scenarios, expected 9",
            run.results.len()
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in &run.results {
        let t = r.report.tlri;
        if !(0.178..=0.21).contains(&t) {
            return Err(format!(
                "{} tlri {t:.4} outside [0.178, 0.21]",
                r.scenario.id()
            ));
        }
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Ok(format!("9 baselines, tlri {lo:.4}..{hi:.4}"))
}

fn brute_cliff(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += if x > y {
                1
            } else if x < y {
                -1
            } else {
                0
            };
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

fn quadratic_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}

fn oracles() -> Outcome {
    let started = Instant::now();
    let mut rng = DeterministicRng::from_seed(77);
    for case in 0..500 {
        let n0 = 1 + rng.below(200) as usize;
        let n1 = 1 + rng.below(200) as usize;
        // Coarse values force plenty of ties.
        let levels = 2 + rng.below(40);
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.below(levels) as f64 * 0.5).collect() };
        let a = draw(n0);
        let b = draw(n1);
        let fast = metrics::cliffs_delta(&a, &b).map_err(|e| e.to_string())?;
        if fast != brute_cliff(&a, &b) {
            return Err(format!("cliff mismatch on case {case}"));
        }
        let ks = metrics::ks_distance(&a, &b).map_err(|e| e.to_string())?;
        if ks != quadratic_ks(&a, &b) {
            return Err(format!("ks mismatch on case {case}"));
        }
    }
    let mi =
        metrics::binned_mi(&[1.0, 1.0, 9.0], &[1.0, 9.0, 9.0], 2).map_err(|e| e.to_string())?;
    let hand =
        2.0 * (1.0 / 3.0) * (4.0f64 / 3.0).log2() + 2.0 * (1.0 / 6.0) * (2.0f64 / 3.0).log2();
    if (mi - hand).abs() > 1e-9 || (mi - 0.0817).abs() > 5e-5 {
        return Err(format!("mi {mi} vs {hand}"));
    }
    let t = metrics::welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0])
        .map_err(|e| e.to_string())?;
    if (t.t + 1.0).abs() > 1e-12 || t.degenerate {
        return Err(format!("welch {t:?}"));
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!(
        "500 cliff/ks instances exact, mi {mi:.6}, welch {}",
        t.t
    ))
}

fn determinism() -> Outcome {
    let started = Instant::now();
    let matrix = ScenarioMatrix::paper_matrix();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (k, parallelism) in [1usize, 8, 8].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let run = runner::run_matrix(&matrix, parallelism, false).map_err(|e| e.to_string())?;
        tlri_core::results::write_results(&out, &matrix, &run, false, false)
            .map_err(|e| e.to_string())?;
        let read = |name: &str| fs::read(out.join(name)).map_err(|e| e.to_string());
        outputs.push((
            read("results.csv")?,
            read("results.json")?,
            read("summary.csv")?,
        ));
    }
    within(Duration::from_secs(120), started)?;
    if outputs[1] != outputs[2] {
        return Err("repeated runs differ".into());
    }
    if outputs[0] != outputs[1] {
        return Err("parallelism 1 and 8 differ".into());
    }
    let rows = String::from_utf8_lossy(&outputs[0].0).lines().count() - 1;
    Ok(format!(
        "{rows} rows, byte-identical across repeats and parallelism 1/8"
    ))
}

fn per_seed_runs() -> Vec<BTreeMap<String, f64>> {
    seeds()
        .map(|seed| {
            let mut m = ScenarioMatrix::paper_matrix();
            m.master_seed = seed;
            tlri_by_id(&run(&m))
        })
        .collect()
}

fn tally(runs: &[BTreeMap<String, f64>], check: impl Fn(&BTreeMap<String, f64>) -> bool) -> usize {
    runs.iter().filter(|r| check(r)).count()
}

fn env_ordering(runs: &[BTreeMap<String, f64>]) -> Outcome {
    let mut notes = Vec::new();
    for scheme in ["kyber", "saber", "frodo"] {
        let ok = tally(runs, |r| {
            let t = |env: &str| r[&format!("{scheme}/{env}/cache_index/1")];
            t("idle") - t("jitter") >= 0.01 && t("jitter") - t("loaded") >= 0.01
        });
        if ok < NEEDED {
            return Err(format!("{scheme}: ordering held in {ok}/{SEEDS} seeds"));
        }
        notes.push(format!("{scheme} {ok}/{SEEDS}"));
    }
    Ok(notes.join(", "))
}

fn leak_ordering(runs: &[BTreeMap<String, f64>]) -> Outcome {
    let ok = tally(runs, |r| {
        let t = |leak: &str| r[&format!("kyber/idle/{leak}/1")];
        t("cache_index") >= t("branch")
            && t("branch") > t("memcmp_early")
            && t("memcmp_early") > t("div_latency")
    });
    let first = &runs[0];
    let t = |leak: &str| first[&format!("kyber/idle/{leak}/1")];
    let detail = format!(
        "{ok}/{SEEDS} seeds; first seed cache {:.3} branch {:.3} memcmp {:.3} div {:.3}",
        t("cache_index"),
        t("branch"),
        t("memcmp_early"),
        t("div_latency")
    );
    if ok < NEEDED {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn scheme_ordering(runs: &[BTreeMap<String, f64>]) -> Outcome {
    let ok = tally(runs, |r| {
        let t = |scheme: &str| r[&format!("{scheme}/idle/cache_index/1")];
        t("kyber") > t("saber") && t("saber") > t("frodo")
    });
    if ok < NEEDED {
        return Err(format!("ordering held in {ok}/{SEEDS} seeds"));
    }
    let frodo_worst = runs
        .iter()
        .flat_map(|r| {
            r.iter()
                .filter(|(id, _)| id.starts_with("frodo/"))
                .map(|(_, &t)| t)
        })
        .fold(0.0, f64::max);
    if frodo_worst >= 0.5 {
        return Err(format!(
            "frodo worst-case tlri {frodo_worst:.3} is not below 0.5"
        ));
    }
    Ok(format!(
        "{ok}/{SEEDS} seeds; frodo worst case {frodo_worst:.3}"
    ))
}

fn alpha_monotonicity() -> Outcome {
    let alphas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let mut m = ScenarioMatrix::paper_matrix();
    m.environments = vec![Environment::Idle];
    m.leak_models = vec![LeakModel::Branch, LeakModel::CacheIndex];
    m.alphas = alphas.to_vec();
    m.n_traces = 50_000;
    let r = tlri_by_id(&run(&m));
    let mut worst = 0.0f64;
    for scheme in ["kyber", "saber", "frodo"] {
        for leak in ["branch", "cache_index"] {
            let curve: Vec<f64> = alphas
                .iter()
                .map(|a| r[&format!("{scheme}/idle/{leak}/{a}")])
                .collect();
            for w in curve.windows(2) {
                let drop = w[0] - w[1];
                worst = worst.max(drop);
                if drop > 0.005 {
                    return Err(format!(
                        "{scheme}/{leak} curve {curve:.4?} drops by {drop:.4}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "6 curves over alpha {alphas:?}, largest step down {worst:.4}"
    ))
}

fn sweep_stability() -> Outcome {
    let matrix = ScenarioMatrix::paper_matrix();
    let scenario = matrix
        .scenario("kyber", Environment::Idle, LeakModel::CacheIndex, 1.0)
        .map_err(|e| e.to_string())?;
    let traces = runner::generate_traces(&matrix, &scenario)
        .map_err(|e| e.to_string())?
        .traces;
    let grid = sweep::default_grid(traces.len());
    let options = SweepOptions {
        bins: matrix.bins,
        min_prefix: matrix.sweep.min_prefix,
        weights: matrix.weights,
    };
    let mut worst = 0.0f64;
    let mut checked = 0;
    for shuffle_seed in 1..=5 {
        let curve =
            sweep::run_sweep(&traces, &grid, shuffle_seed, &options).map_err(|e| e.to_string())?;
        let last = curve
            .points
            .last()
            .and_then(|p| p.report())
            .ok_or("empty sweep")?
            .tlri;
        for p in &curve.points {
            if p.prefix_n < 5_000 {
                continue;
            }
            let t = p.report().ok_or("skipped point above 5000")?.tlri;
            checked += 1;
            worst = worst.max((t - last).abs());
        }
    }
    if worst > 0.05 {
        return Err(format!("largest deviation {worst:.4}"));
    }
    Ok(format!(
        "{checked} points with N >= 5000 over 5 shuffles, largest deviation {worst:.4}"
    ))
}

fn invariance() -> Outcome {
    let matrix = ScenarioMatrix::paper_matrix();
    let mut worst = 0.0f64;
    for (scheme, env, leak) in [
        ("kyber", Environment::Idle, LeakModel::CacheIndex),
        ("saber", Environment::Loaded, LeakModel::DivLatency),
        ("frodo", Environment::Jitter, LeakModel::Branch),
    ] {
        let s = matrix
            .scenario(scheme, env, leak, 1.0)
            .map_err(|e| e.to_string())?;
        let ts = runner::generate_traces(&matrix, &s)
            .map_err(|e| e.to_string())?
            .traces;
        let base =
            MetricReport::compute(&ts, matrix.bins, &matrix.weights).map_err(|e| e.to_string())?;
        for (label, f) in [
            (
                "shift",
                Box::new(|t: f64| t + 98_765.432_1) as Box<dyn Fn(f64) -> f64>,
            ),
            ("scale", Box::new(|t: f64| t * 3.7)),
            ("scale", Box::new(|t: f64| t * 0.013)),
        ] {
            let mapped = ts.map_timings(&f).map_err(|e| e.to_string())?;
            let r = MetricReport::compute(&mapped, matrix.bins, &matrix.weights)
                .map_err(|e| e.to_string())?;
            let diff = (r.tlri - base.tlri).abs();
            worst = worst.max(diff);
            if diff > 1e-9 {
                return Err(format!("{} {label}: tlri moved by {diff:e}", s.id()));
            }
        }
    }

    // alpha = 0: every leak model must leave the classes indistinguishable.
    let params = presets::kyber();
    let mut max_d = 0.0f64;
    for leak in LeakModel::ALL {
        let s = Scenario::new("kyber", Environment::Idle, leak, 0.0, 20_000, 4242)
            .map_err(|e| e.to_string())?;
        let none = Scenario::new(
            "kyber",
            Environment::Idle,
            LeakModel::None,
            0.0,
            20_000,
            4242,
        )
        .map_err(|e| e.to_string())?;
        let g = simulate::generate(&s, &params, false, true).map_err(|e| e.to_string())?;
        let (a, b) = partition(&g.traces);
        let d = metrics::ks_distance(&a, &b).map_err(|e| e.to_string())?;
        max_d = max_d.max(d);
        if d >= 0.02 {
            return Err(format!("{leak} at alpha 0: class ks_d {d:.4}"));
        }
        if leak != LeakModel::CacheIndex {
            let baseline =
                simulate::generate(&none, &params, false, true).map_err(|e| e.to_string())?;
            if baseline.traces != g.traces {
                return Err(format!("{leak} at alpha 0 differs from the no-leak traces"));
            }
        }
    }
    Ok(format!(
        "tlri moved at most {worst:.1e} under shift/scale; alpha 0 class ks_d at most {max_d:.4}"
    ))
}

fn main() -> ExitCode {
    let runs = per_seed_runs();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("1 no-leak floor", Box::new(floor)),
        ("2 metric oracles", Box::new(oracles)),
        ("3 determinism", Box::new(determinism)),
        ("4 environment ordering", Box::new(|| env_ordering(&runs))),
        ("5 leak-model ordering", Box::new(|| leak_ordering(&runs))),
        ("6 scheme ordering", Box::new(|| scheme_ordering(&runs))),
        ("7 alpha monotonicity", Box::new(alpha_monotonicity)),
        ("8 sweep stability", Box::new(sweep_stability)),
        ("9 invariance", Box::new(invariance)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! `tlri`: run scenario matrices, sample-size sweeps and config checks.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use log::info;

use tlri_core::config::{select, ScenarioMatrix};
use tlri_core::results::{self, SweepRow};
use tlri_core::rng::GENERATOR_NAME;
use tlri_core::runner;
use tlri_core::{Error, TOOL_VERSION};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tlri",
    about = "Seeded timing side-channel simulator with TLRI risk scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every scenario of a matrix and write results.csv, results.json and summary.csv.
    Run(RunArgs),
    /// Recompute all metrics on growing prefixes of one scenario's traces.
    Sweep(SweepArgs),
    /// Check a config and list the expanded scenarios with their seeds.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file, or the name of a bundled config.
    #[arg(long, default_value = "paper_matrix")]
    config: PathBuf,
    /// Replace the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Output {
    /// Output directory.
    #[arg(long, env = "TLRI_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    parallelism: u32,
    /// Also write traces_<id>.csv for each scenario.
    #[arg(long)]
    emit_traces: bool,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    output: Output,
    /// Rows in the printed ranking.
    #[arg(long, default_value_t = 15)]
    top: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Scenario as scheme/env/leak/alpha; `*` matches anything but must leave one scenario.
    selector: String,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    output: Output,
    /// Prefix grid: start:end:logK, start:end:linK, a comma list, or `default`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config() || matches!(e, Error::WouldOverwrite(_)) {
            EXIT_CONFIG
        } else {
            EXIT_RUNTIME
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            error,
        }
    }
}

type CliResult = Result<u8, Failure>;

fn load(common: &Common) -> Result<(ScenarioMatrix, bool), Failure> {
    let mut matrix = ScenarioMatrix::load(&common.config)?;
    if let Some(seed) = common.seed {
        matrix.master_seed = seed;
    }
    Ok((matrix, common.seed.is_some()))
}

fn print_ranking(results_csv: &Path, top: usize) -> anyhow::Result<()> {
    let rows = results::read_results_csv(results_csv)
        .with_context(|| format!("reading back {}", results_csv.display()))?;
    let ranked = results::top_k(&rows, top);
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:>4}  {:<10} {:<8} {:<14} {:>6} {:>8} {:>8} {:>8} {:>8} {:>7}",
        "rank", "scheme", "env", "leak", "alpha", "ks_d", "cliff", "mi_bits", "overlap", "tlri"
    )?;
    for (i, r) in ranked.iter().enumerate() {
        writeln!(
            out,
            "{:>4}  {:<10} {:<8} {:<14} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>7.4}",
            i + 1,
            r.scheme,
            r.env,
            r.leak,
            r.alpha.to_string(),
            r.ks_d,
            r.cliff_delta,
            r.mi_bits,
            r.overlap,
            r.tlri
        )?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> CliResult {
    let (matrix, seed_overridden) = load(&args.common)?;
    let scenarios = matrix.expand();
    info!(
        "running {} scenarios with {} worker(s)",
        scenarios.len(),
        args.output.parallelism
    );
    let run = runner::run_scenarios(
        &matrix,
        &scenarios,
        args.output.parallelism as usize,
        args.output.emit_traces,
    )?;
    for f in &run.failures {
        eprintln!("failed: {}: {}", f.scenario.id(), f.error);
    }
    if run.results.is_empty() {
        return Err(anyhow::anyhow!("all {} scenarios failed", scenarios.len()).into());
    }
    let written = results::write_results(
        &args.output.out,
        &matrix,
        &run,
        seed_overridden,
        args.output.force,
    )?;
    eprintln!(
        "wrote {}, {} and {}",
        written.results_csv.display(),
        written.results_json.display(),
        written.summary_csv.display()
    );
    if !written.traces.is_empty() {
        eprintln!("wrote {} trace files", written.traces.len());
    }
    print_ranking(&written.results_csv, args.top)?;
    if run.failures.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "{} of {} scenarios failed",
            run.failures.len(),
            scenarios.len()
        );
        Ok(EXIT_PARTIAL)
    }
}

fn print_sweep(path: &Path) -> anyhow::Result<()> {
    let rows: Vec<SweepRow> = results::read_sweep_csv(path)
        .with_context(|| format!("reading back {}", path.display()))?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:>8} {:>8} {:>8} {:>8}",
        "prefix_n", "ks_d", "mi_bits", "tlri"
    )?;
    for r in rows {
        match (r.ks_d, r.mi_bits, r.tlri) {
            (Some(ks), Some(mi), Some(t)) => {
                writeln!(out, "{:>8} {:>8.4} {:>8.4} {:>8.4}", r.prefix_n, ks, mi, t)?
            }
            _ => writeln!(
                out,
                "{:>8} skipped: {}",
                r.prefix_n,
                r.skip_reason.unwrap_or_default()
            )?,
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let (matrix, _) = load(&args.common)?;
    let matches = select(&matrix.expand(), &args.selector)?;
    let scenario = match matches.as_slice() {
        [one] => one,
        [] => {
            return Err(
                Error::Config(format!("selector `{}` matches no scenario", args.selector)).into(),
            )
        }
        many => {
            let ids: Vec<String> = many.iter().map(|s| s.id()).collect();
            return Err(Error::Config(format!(
                "selector `{}` matches {} scenarios:\n  {}",
                args.selector,
                many.len(),
                ids.join("\n  ")
            ))
            .into());
        }
    };
    let out = &args.output;
    let curve = runner::with_workers(out.parallelism as usize, || {
        runner::sweep_scenario(&matrix, scenario, args.grid.as_deref(), args.shuffle_seed)
    })??;
    let path = results::write_sweep(&out.out, scenario, &curve, out.force)?;
    eprintln!("wrote {}", path.display());
    if out.emit_traces {
        let traces = runner::generate_traces(&matrix, scenario)?.traces;
        let p = results::write_traces(&out.out, scenario, &traces, out.force)?;
        eprintln!("wrote {}", p.display());
    }
    print_sweep(&path)?;
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> CliResult {
    let (matrix, _) = load(&args.common)?;
    let scenarios = matrix.expand();
    let mut out = io::stdout().lock();
    for s in &scenarios {
        writeln!(out, "{}\tseed={}", s.id(), s.seed).map_err(anyhow::Error::from)?;
    }
    eprintln!(
        "config ok: {} scenarios, {} traces each, master seed {} (effective {})",
        scenarios.len(),
        matrix.n_traces,
        matrix.master_seed,
        matrix.effective_master_seed()
    );
    Ok(0)
}

fn closed_pipe(error: &anyhow::Error) -> bool {
    error
        .downcast_ref::<io::Error>()
        .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let version: &'static str =
        Box::leak(format!("{TOOL_VERSION} generator={GENERATOR_NAME}").into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) if closed_pipe(&f.error) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

//! `streamforge` command-line interface.

mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use streamforge::metrics::{export, ExportError, ExportTables, Summary};
use streamforge::model::{load_experiment, ExperimentSpec, SpecError};
use streamforge::scenarios::{self, ScenarioError};
use streamforge::sim::{SimDuration, SimTime};
use streamforge::world::{run, RunError, SimOptions};
use thiserror::Error;

use sweep::{apply, point_label, Sweep, SweepError};

#[derive(Parser)]
#[command(name = "streamforge", version, about = "Deterministic stream-processing pipeline emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its exports.
    Run(RunArgs),
    /// Run an experiment once per value of one attribute.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `<attr>=<v1,v2,...>`; attrs: link:<id>.lat|bw|loss, node:<id>.cpuPercentage,
        /// graph.duration, graph.seed, count:<node> (integer ranges like 1..12 allowed)
        #[arg(long)]
        sweep: String,
    },
    /// List or export the bundled scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    Export { name: String, dir: PathBuf },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Bundled scenario name (alternative to --spec).
    scenario: Option<String>,
    /// Path to an experiment GraphML file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "STREAMFORGE_OUT", default_value = "streamforge-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Port counter sampling interval in milliseconds.
    #[arg(long, default_value_t = 500)]
    sample_interval: u64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentSpec, CliError> {
        match (&self.scenario, &self.spec) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either a scenario name or --spec, not both".into())),
            (None, None) => Err(CliError::Usage("a scenario name or --spec is required".into())),
            (None, Some(path)) => Ok(load_experiment(path)?),
            (Some(name), None) => {
                if !scenarios::exists(name) {
                    return Err(ScenarioError::Unknown(name.clone()).into());
                }
                Ok(scenarios::load(name, &self.out.join("scenario"))?)
            }
        }
    }

    fn options(&self) -> Result<SimOptions, CliError> {
        let duration = match self.duration {
            Some(d) if !(d.is_finite() && d >= 0.0) => {
                return Err(CliError::Usage(format!("--duration {d} must be a non-negative number")))
            }
            d => d.map(SimTime::from_secs_f64),
        };
        if self.sample_interval == 0 {
            return Err(CliError::Usage("--sample-interval must be positive".into()));
        }
        Ok(SimOptions {
            seed: self.seed,
            duration,
            sample_interval: SimDuration::from_millis(self.sample_interval),
            trace: false,
        })
    }
}

fn run_one(spec: ExperimentSpec, opts: &SimOptions, out: &Path) -> Result<Summary, CliError> {
    let world = run(spec, opts)?;
    let tables = ExportTables::build(world.metrics(), world.directory(), world.network());
    Ok(export(&tables, out)?)
}

fn print_summary(s: &Summary) {
    for t in &s.topics {
        println!(
            "topic {:<24} produced {:>7} delivered {:>7} lost {:>5} in-flight {:>5} dup {:>5} latency mean {:.3} ms p99 {:.3} ms",
            t.topic, t.produced, t.delivered, t.lost, t.in_flight, t.duplicates, t.latency.mean_ms, t.latency.p99_ms
        );
    }
    if s.pipeline.count > 0 {
        println!(
            "end-to-end: {} samples, mean {:.3} ms, median {:.3} ms, p99 {:.3} ms",
            s.pipeline.count, s.pipeline.mean_ms, s.pipeline.median_ms, s.pipeline.p99_ms
        );
    }
}

#[derive(Serialize)]
struct SweepRow {
    attr: String,
    value: String,
    produced: usize,
    delivered: usize,
    lost: usize,
    duplicates: u64,
    deliveries_per_s: f64,
    e2e_samples: usize,
    e2e_mean_ms: f64,
    e2e_median_ms: f64,
    e2e_p99_ms: f64,
}

fn sweep_row(name: &str, value: String, s: &Summary, duration: SimTime) -> SweepRow {
    let secs = duration.as_secs_f64();
    let deliveries: usize = s.topics.iter().map(|t| t.latency.count).sum();
    SweepRow {
        attr: name.to_string(),
        value,
        produced: s.topics.iter().map(|t| t.produced).sum(),
        delivered: s.topics.iter().map(|t| t.delivered).sum(),
        lost: s.topics.iter().map(|t| t.lost).sum(),
        duplicates: s.topics.iter().map(|t| t.duplicates).sum(),
        deliveries_per_s: if secs > 0.0 { deliveries as f64 / secs } else { 0.0 },
        e2e_samples: s.pipeline.count,
        e2e_mean_ms: s.pipeline.mean_ms,
        e2e_median_ms: s.pipeline.median_ms,
        e2e_p99_ms: s.pipeline.p99_ms,
    }
}

fn run_sweep(args: &RunArgs, raw: &str) -> Result<(), CliError> {
    let sweep = Sweep::parse(raw)?;
    let base = args.load()?;
    sweep.check(&base)?;
    let opts = args.options()?;
    let results: Vec<Result<SweepRow, CliError>> = sweep
        .values
        .par_iter()
        .map(|v| {
            let spec = apply(base.clone(), &sweep.name, &sweep.attr, v)?;
            let duration = opts.duration.unwrap_or(spec.duration);
            let out = args.out.join(point_label(&sweep.name, v));
            let summary = run_one(spec, &opts, &out)?;
            Ok(sweep_row(&sweep.name, v.to_string(), &summary, duration))
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let path = args.out.join("sweep_summary.csv");
    let csv_err = |source| CliError::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
        println!(
            "{}={}: produced {} delivered {} lost {} e2e mean {:.3} ms",
            r.attr, r.value, r.produced, r.delivered, r.lost, r.e2e_mean_ms
        );
    }
    w.flush().map_err(|e| csv_err(e.into()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let spec = args.load()?;
            let opts = args.options()?;
            let summary = run_one(spec, &opts, &args.out)?;
            print_summary(&summary);
            println!("wrote {}", args.out.display());
        }
        Command::Sweep { run, sweep } => run_sweep(&run, &sweep)?,
        Command::Scenarios { action } => match action {
            ScenarioAction::List => {
                for (name, about) in scenarios::list() {
                    println!("{name:<12} {about}");
                }
            }
            ScenarioAction::Export { name, dir } => {
                let path = scenarios::export(&name, &dir)?;
                println!("{}", path.display());
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

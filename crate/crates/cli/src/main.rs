use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tinyscale::config::{RunConfig, TraceSource};
use tinyscale::report::{self, ComparisonCell};
use tinyscale::sim::{self, ScenarioReport};
use tinyscale::{Error, Result};

const DEFAULT_OUT: &str = "tinyscale-out";
const SIMULATE_DEFAULTS: &[&str] = &["ema5-3"];
const COMPARE_DEFAULTS: &[&str] = &["vpa", "hw", "sma5-3", "ema5-3"];

/// Replay CPU usage traces through autoscaling recommenders.
#[derive(Debug, Parser)]
#[command(name = "tinyscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run recommenders over one trace and write timelines plus a summary.
    Simulate(RunArgs),
    /// Tabulate slack and insufficient CPU for every workload and recommender.
    Compare(RunArgs),
    /// Measure the CPU cost of many concurrent EMA recommenders.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Trace CSV with header `t_seconds,usage_millicores`.
    #[arg(long, value_name = "PATH")]
    trace: Vec<PathBuf>,
    /// Built-in burst profile, e.g. `default-17m`.
    #[arg(long, value_name = "NAME")]
    profile: Vec<String>,
    /// `vpa`, `hw`, `sma<size>-<trackers>` or `ema<size>-<trackers>`, with
    /// optional `,key=value` parameters.
    #[arg(long = "recommender", value_name = "SPEC")]
    recommenders: Vec<String>,
    #[arg(long, value_name = "S")]
    cooldown: Option<u64>,
    #[arg(long, value_name = "M")]
    min_change: Option<u64>,
    #[arg(long, value_name = "M")]
    initial_request: Option<u64>,
    #[arg(long, value_name = "M")]
    min_request: Option<u64>,
    /// Noise seed for generated profiles.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Cold/warm boundary in seconds (defaults to the first burst of a profile).
    #[arg(long, value_name = "S")]
    split: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// TOML config file; command-line values take precedence.
    #[arg(long, value_name = "PATH", env = "TINYSCALE_CONFIG")]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            trace: self.trace,
            profile: self.profile,
            recommenders: self.recommenders,
            cooldown: self.cooldown,
            min_change: self.min_change,
            initial_request: self.initial_request,
            min_request: self.min_request,
            seed: self.seed,
            out: self.out,
            split: self.split,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Instance counts to measure.
    #[arg(long, value_delimiter = ',', default_value = "10,100,500,1000")]
    counts: Vec<usize>,
    /// Simulated seconds per measurement.
    #[arg(long, default_value_t = 1000)]
    duration: u64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Degree of the fitted polynomial.
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// Extra instance counts to extrapolate the fit to.
    #[arg(long, value_delimiter = ',', default_value = "2000")]
    extrapolate: Vec<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn run_source(config: &RunConfig, source: &TraceSource, defaults: &[&str]) -> Result<ScenarioReport> {
    let (trace, cold_len) = source.load()?;
    let setups = config.setups(defaults)?;
    let policy = config.policy();
    match config.split.or(cold_len) {
        Some(split) => sim::run_cold_warm(&trace, &setups, &policy, split),
        None => sim::run_scenario(&trace, &setups, &policy),
    }
}

fn out_dir(config_out: Option<PathBuf>) -> PathBuf {
    config_out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn simulate(args: RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let sources = config.sources(false)?;
    let [source] = sources.as_slice() else {
        return Err(Error::Config(format!(
            "simulate takes exactly one trace or profile, got {}",
            sources.len()
        )));
    };
    let report = run_source(&config, source, SIMULATE_DEFAULTS)?;
    let dir = out_dir(config.out.clone());
    let written = report::write_scenario(&dir, &report, config.seed)?;

    println!("{} ({} s)", report.trace, report.length);
    for run in &report.runs {
        let m = &run.summary;
        println!(
            "  {:<20} avg_slack {:>9.2}  avg_insufficient {:>9.2}  updates {:>4}  throttled {:>5} s",
            run.name, m.avg_slack, m.avg_insufficient, m.update_count, m.throttled_seconds
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn compare(args: RunArgs) -> Result<()> {
    let config = args.resolve()?;
    let sources = config.sources(true)?;
    let setups = config.setups(COMPARE_DEFAULTS)?;
    if sources.len() < 2 && setups.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two recommenders or two traces".to_owned(),
        ));
    }
    let reports = sources
        .par_iter()
        .map(|s| run_source(&config, s, COMPARE_DEFAULTS))
        .collect::<Result<Vec<_>>>()?;

    let cells = ComparisonCell::from_reports(&reports);
    let text = report::comparison_text(&cells);
    let dir = out_dir(config.out.clone());
    report::write_file(&dir, "comparison.csv", &report::comparison_csv(&cells))?;
    report::write_file(&dir, "comparison.txt", &text)?;
    for r in &reports {
        report::write_scenario(&dir.join(&r.trace), r, config.seed)?;
    }
    print!("{text}");
    println!("wrote {}", dir.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let points = sim::bench_overhead(&args.counts, args.duration, args.repeats)?;
    let (fit, fitted) = sim::fit_overhead(&points, args.degree, &args.extrapolate)?;
    let dir = out_dir(args.out);
    report::write_file(&dir, "bench.csv", &report::bench_csv(&points))?;
    report::write_file(&dir, "bench_fit.csv", &report::bench_fit_csv(&fit, &fitted))?;

    println!("{:>9}  {:>12}  {:>12}  {:>10}", "instances", "calls", "utilization", "ns/call");
    for p in &points {
        println!(
            "{:>9}  {:>12}  {:>11.4}%  {:>10.1}",
            p.instances,
            p.calls,
            p.utilization * 100.0,
            p.ns_per_call
        );
    }
    println!("fit coefficients (lowest degree first): {:?}", fit.coefficients);
    for p in fitted.iter().filter(|p| p.extrapolated) {
        println!("{:>9}  {:>12}  {:>11.4}%  (extrapolated)", p.instances, "-", p.utilization * 100.0);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Compare(args) => compare(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ Error::Io { .. }) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

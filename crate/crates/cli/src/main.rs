use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use maosm_core::coordinator::Algorithm;
use maosm_core::harness::{
    compare_report, read_summary, regret_suite, run_suite_partial, write_suite, ExperimentConfig,
};
use maosm_core::par::Execution;
use maosm_core::validate;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "maosm", version, about = "Multi-agent online submodular maximization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated experiments from a TOML config and write metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the configured algorithm.
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Option<Algorithm>,
        /// Run agents and replicates on one thread.
        #[arg(long)]
        sequential: bool,
        /// Also write world-trace.csv per replicate.
        #[arg(long)]
        world_trace: bool,
    },
    /// Rank finished runs by final running-average utility.
    Compare {
        /// Run output directories (each with a summary.json).
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dynamic regret over a grid of horizons on a small instance.
    Regret {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        horizons: Vec<usize>,
        /// Also write the curve as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized property sweeps and print pass/fail per check.
    ValidateTheory {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier on the default number of cases.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::ALL
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| {
            let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            format!("unknown algorithm `{s}`, expected one of: {}", names.join(", "))
        })
}

fn label(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, seed, replicates, algorithm, sequential, world_trace } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.experiment.seed = s;
            }
            if let Some(r) = replicates {
                cfg.experiment.replicates = r;
            }
            if let Some(a) = algorithm {
                cfg.experiment.algorithm = a;
                cfg.coordinator.geometry = None;
            }
            if sequential {
                cfg.coordinator.execution = Execution::Sequential;
            }
            if world_trace {
                cfg.output.world_trace = true;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            cfg.validate()?;
            let (reps, err) = run_suite_partial(&cfg);
            write_suite(&cfg, &reps, &cfg.output.dir)
                .with_context(|| format!("writing {}", cfg.output.dir.display()))?;
            if let Some(e) = err {
                bail!("{} of {} replicates finished before failure: {e}", reps.len(), cfg.experiment.replicates);
            }
            let summary = read_summary(&cfg.output.dir)?;
            println!(
                "{}: {} replicate(s), T = {}, final running-average utility {:.6} ± {:.6} -> {}",
                summary.algorithm,
                summary.replicates.len(),
                summary.horizon,
                summary.final_running_avg_utility,
                summary.final_running_avg_utility_std,
                cfg.output.dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { inputs, out } => {
            let entries = inputs
                .iter()
                .map(|d| Ok((label(d), read_summary(d).with_context(|| format!("reading {}", d.display()))?)))
                .collect::<Result<Vec<_>>>()?;
            let table = compare_report(&entries)?;
            print!("{table}");
            if let Some(o) = out {
                std::fs::write(&o, table.to_csv()).with_context(|| format!("writing {}", o.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Regret { config, horizons, out } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let report = regret_suite(&cfg, &horizons)?;
            println!("{}: alpha = {:.6}, beta = {:.6}", report.algorithm, report.alpha, report.beta);
            println!("{:>8}  {:>14}  {:>12}  {:>8}", "T", "regret", "regret/T", "C_T");
            for r in &report.rows {
                println!("{:>8}  {:>14.6}  {:>12.6}  {:>8}", r.horizon, r.regret, r.regret_per_round, r.c_t);
            }
            println!("regret/T decreasing: {}", report.is_decreasing());
            if let Some(o) = out {
                std::fs::write(&o, report.to_csv()).with_context(|| format!("writing {}", o.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateTheory { seed, scale } => {
            if !(scale > 0.0 && scale.is_finite()) {
                bail!("--scale must be positive");
            }
            let reports = validate::run_all(seed, scale)?;
            for r in &reports {
                println!("{r}");
            }
            Ok(if reports.iter().all(|r| r.passed()) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

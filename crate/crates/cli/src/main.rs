use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use holocover_cli::{emit_report, run_batch, Format, RunConfig, Summary};

#[derive(Parser)]
#[command(name = "holocover", version, about = "Integral representation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "both")]
        format: Format,
        /// Record wall times in the JSON reports (they are then no longer reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RunConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Exit code: 0 all passed, 1 a check failed, 2 an experiment errored.
fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("ok: {} experiments", cfg.experiments.len());
            Ok(0)
        }
        Command::Run {
            config,
            out,
            seed,
            format,
            timings,
        } => {
            let cfg = load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let results = run_batch(&cfg, seed);
            let mut reports = Vec::with_capacity(results.len());
            for (mut report, elapsed) in results {
                let secs = elapsed.as_secs_f64();
                eprintln!("{} took {secs:.3} s", report.id);
                if timings {
                    report.wall_time_s = Some(secs);
                }
                if let Some(err) = &report.error {
                    eprintln!("error: {err}");
                }
                emit_report(&report, &out, format)?;
                let status = if report.passed { "PASS" } else { "FAIL" };
                println!("{status} {} ({})", report.id, report.experiment);
                for c in report.failed_checks() {
                    println!("  {}: {} vs {:?} {}", c.name, c.value, c.comparison, c.limit);
                }
                reports.push(report);
            }
            let summary = Summary::from_reports(seed, &reports);
            summary.emit(&out)?;
            Ok(if reports.iter().any(|r| r.error.is_some()) {
                2
            } else if summary.passed {
                0
            } else {
                1
            })
        }
    }
}

//! Config-driven experiment runner. `fcla run` executes the Monte Carlo
//! comparison described by a TOML config and writes `run.json`, `trace.csv`,
//! and `final.csv`; `fcla validate` checks a config without running it.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fcla::experiment::{
    apply_overrides, run_experiment, validate_config, write_outputs, Severity,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fcla", version, about = "Flexible cylindrical array sum-rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override experiment.base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override experiment.trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads for Monte Carlo trials (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: experiment.output from the config,
        /// falling back to ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override any config key, e.g. --set solver.power=2.0. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check a config file for errors and feasibility without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Apply overrides before validating. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            jobs,
            out,
            mut set,
        } => {
            if let Some(seed) = seed {
                set.push(format!("experiment.base_seed={seed}"));
            }
            if let Some(trials) = trials {
                set.push(format!("experiment.trials={trials}"));
            }
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = apply_overrides(&text, &set)?;

            let diagnostics = validate_config(&cfg);
            let mut invalid = false;
            for d in &diagnostics {
                match d.severity {
                    Severity::Error => {
                        invalid = true;
                        eprintln!("error: {}", d.message);
                    }
                    Severity::Warning => eprintln!("warning: {}", d.message),
                }
            }
            if invalid {
                bail!("invalid config {}", config.display());
            }

            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .context("configuring the worker pool")?;
            }

            let run = run_experiment(&cfg)?;
            let out_dir = out
                .or_else(|| cfg.experiment.output.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            write_outputs(&run, &out_dir)
                .with_context(|| format!("writing outputs to {}", out_dir.display()))?;
            println!(
                "wrote {}, trace.csv, final.csv",
                out_dir.join("run.json").display()
            );
            for point in &run.points {
                for variant in &point.report.variants {
                    match point.value {
                        Some(v) => println!(
                            "{} @ {v}: mean final sum rate {:.6} bits ({} trials)",
                            variant.variant.label(),
                            variant.final_mean,
                            variant.traces.len()
                        ),
                        None => println!(
                            "{}: mean final sum rate {:.6} bits ({} trials)",
                            variant.variant.label(),
                            variant.final_mean,
                            variant.traces.len()
                        ),
                    }
                }
            }

            let failed = run.failed_seeds();
            if !failed.is_empty() {
                eprintln!(
                    "warning: {} trial(s) failed numerically and were excluded; seeds: {:?}",
                    failed.len(),
                    failed
                );
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, set } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = apply_overrides(&text, &set)?;
            let diagnostics = validate_config(&cfg);
            if diagnostics.is_empty() {
                println!("OK");
                return Ok(ExitCode::SUCCESS);
            }
            let mut invalid = false;
            for d in &diagnostics {
                match d.severity {
                    Severity::Error => {
                        invalid = true;
                        println!("error: {}", d.message);
                    }
                    Severity::Warning => println!("warning: {}", d.message),
                }
            }
            Ok(if invalid {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

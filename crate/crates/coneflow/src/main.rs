//! The `coneflow` experiment runner.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or
//! configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coneflow::cli::{list_experiments, reports_to_csv, run, ExperimentConfig, Report};

#[derive(Parser)]
#[command(
    name = "coneflow",
    version,
    about = "Experiment suites for CCR flows over cones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described in a JSON config (object or array).
    Run {
        config: PathBuf,
        /// Write the JSON report here (default: stdout summary only).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the CSV dimension table here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the seed of every experiment in the batch.
        #[arg(long)]
        seed: Option<u64>,
        /// Scales every tolerance of every experiment.
        #[arg(long)]
        tol_scale: Option<f64>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for (name, description) in list_experiments() {
                println!("{name:<14} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            csv,
            seed,
            tol_scale,
        } => match run_batch(&config, out, csv, seed, tol_scale) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(message) => {
                eprintln!("error: {message}");
                ExitCode::from(2)
            }
        },
    }
}

fn run_batch(
    path: &PathBuf,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    seed: Option<u64>,
    tol_scale: Option<f64>,
) -> Result<bool, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))?;
    let mut configs: Vec<ExperimentConfig> = if value.is_array() {
        serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))?
    } else {
        vec![serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))?]
    };
    for cfg in &mut configs {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(t) = tol_scale {
            cfg.tol_scale = t;
        }
    }

    let mut reports: Vec<Report> = Vec::new();
    for cfg in &configs {
        let report = run(cfg).map_err(|e| e.to_string())?;
        let status = if report.pass { "pass" } else { "FAIL" };
        println!(
            "{:<14} {status}  ({:.0} ms)",
            report.experiment, report.wall_clock_ms
        );
        for v in &report.verdicts {
            if !v.pass {
                println!(
                    "  failed: {} = {} (expected {})",
                    v.name, v.value, v.expected
                );
            }
        }
        reports.push(report);
    }

    let all_pass = reports.iter().all(|r| r.pass);
    let json_out = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .map_err(|e| e.to_string())?;

    // Per-config output paths apply when no --out is given.
    if out.is_none() {
        for (cfg, report) in configs.iter().zip(&reports) {
            if let Some(path) = &cfg.output {
                fs::write(
                    path,
                    serde_json::to_string_pretty(report).map_err(|e| e.to_string())?,
                )
                .map_err(|e| e.to_string())?;
            }
        }
    }
    if let Some(path) = out {
        fs::write(&path, &json_out).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = csv {
        fs::write(&path, reports_to_csv(&reports))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(all_pass)
}

//! `aggdiff` — front end for the constrained aggregation-diffusion solver.
//!
//! Subcommands: `run <config>` executes one configured solve and writes CSV/JSON
//! artifacts; `validate` runs the acceptance battery; `compare <a> <b>` runs two
//! configs and reports cross distances at matched times; `sweep` fans one config
//! out over a parameter list, one run per thread.
//!
//! Exit codes: 0 success, 1 bad config or arguments, 2 solver stall,
//! 3 failed checks or criteria. The `AGGDIFF_OUT` environment variable
//! overrides every output location.

mod artifacts;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::artifacts::{compare_outcomes, execute_run, SCHEMA_VERSION};
use crate::config::{override_key, parse_config, parse_config_str, CliConfig};
use crate::error::{io_err, CliError, Result};

#[derive(Parser)]
#[command(
    name = "aggdiff",
    version,
    about = "Constrained aggregation-diffusion-reaction solver: minimizing-movement transport \
             plus reaction splitting, finite-volume cross-check, and a self-validation battery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured solve and write diagnostics.csv, snapshots/, and
    /// summary.json into the configured output directory.
    Run {
        /// TOML configuration file.
        config: PathBuf,
    },
    /// Run the acceptance battery (or a single criterion) and write
    /// validation.json; prints one verdict line per criterion.
    Validate {
        /// Run only the named criterion (e.g. "dissipation", "kernel").
        #[arg(long)]
        only: Option<String>,
        /// Directory for validation.json (default "out/validate").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two configs and report L1 plus transport (or flat-metric) distances
    /// at every matched output time.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Path of the comparison report (default "compare.json").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one config once per value of a dotted key (e.g. --param scheme.tau),
    /// concurrently, each run in its own subdirectory.
    Sweep {
        config: PathBuf,
        /// Dotted config key to vary, e.g. "scheme.tau" or "model.chi".
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long)]
        values: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os("AGGDIFF_OUT").map(PathBuf::from)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Validate { only, out } => cmd_validate(only.as_deref(), out),
        Command::Compare { config_a, config_b, out } => cmd_compare(&config_a, &config_b, out),
        Command::Sweep { config, param, values } => cmd_sweep(&config, &param, &values),
    }
}

fn effective_out(cfg: &CliConfig) -> PathBuf {
    env_out().unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

fn cmd_run(path: &Path) -> Result<()> {
    let cfg = parse_config(path)?;
    let out_dir = effective_out(&cfg);
    let outcome = execute_run(&cfg, &out_dir)?;
    for check in &outcome.checks {
        let verdict = match check.passed {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "skip",
        };
        println!("check {:<12} {} — {}", check.id, verdict, check.detail);
    }
    println!(
        "run finished: {} steps in {:.2}s, artifacts in {}",
        outcome.times.len() - 1,
        outcome.wall_clock,
        out_dir.display()
    );
    match outcome.status_error() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_validate(only: Option<&str>, out: Option<PathBuf>) -> Result<()> {
    let started = Instant::now();
    let results = aggdiff::validation::run_all(only)?;
    let wall = started.elapsed().as_secs_f64();
    for r in &results {
        println!("[{}] {:<12} {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.detail);
    }
    let failures: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "{} of {} criteria passed in {wall:.1}s",
        results.len() - failures.len(),
        results.len()
    );

    let out_dir = out
        .or_else(env_out)
        .unwrap_or_else(|| PathBuf::from("out/validate"));
    std::fs::create_dir_all(&out_dir).map_err(io_err(out_dir.display().to_string()))?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "validate",
        "only": only,
        "criteria": results
            .iter()
            .map(|r| json!({ "id": r.id, "passed": r.passed, "detail": r.detail }))
            .collect::<Vec<_>>(),
        "passed": failures.is_empty(),
        "wall_clock_sec": wall,
        "versions": { "aggdiff-cli": env!("CARGO_PKG_VERSION"), "aggdiff": aggdiff::VERSION },
    });
    let path = out_dir.join("validation.json");
    let mut text = serde_json::to_string_pretty(&report).expect("JSON serialization cannot fail");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(path.display().to_string()))?;

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!("criteria failed: {}", failures.join(", "))))
    }
}

fn cmd_compare(path_a: &Path, path_b: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg_a = parse_config(path_a)?;
    let cfg_b = parse_config(path_b)?;
    // With AGGDIFF_OUT set, both runs and the report land under one root
    // instead of the configs' own output directories.
    let (dir_a, dir_b, report_path) = match env_out() {
        Some(root) => (root.join("a"), root.join("b"), root.join("compare.json")),
        None => (
            PathBuf::from(&cfg_a.output_dir),
            PathBuf::from(&cfg_b.output_dir),
            out.clone().unwrap_or_else(|| PathBuf::from("compare.json")),
        ),
    };
    let report_path = out.unwrap_or(report_path);
    if dir_a == dir_b {
        return Err(CliError::Config(
            "the two configs write to the same output_dir; give them distinct directories".into(),
        ));
    }
    let a = execute_run(&cfg_a, &dir_a)?;
    let b = execute_run(&cfg_b, &dir_b)?;
    let rows = compare_outcomes(&a, &b)?;
    let last = rows.last().expect("compare_outcomes errors when no time matches");
    println!(
        "compared {} matched times; at t={} the L1 distance is {}",
        rows.len(),
        last["time"],
        last["l1"]
    );
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "compare",
        "config_a": cfg_a.echo(),
        "config_b": cfg_b.echo(),
        "rows": rows,
        "versions": { "aggdiff-cli": env!("CARGO_PKG_VERSION"), "aggdiff": aggdiff::VERSION },
    });
    if let Some(parent) = report_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err(parent.display().to_string()))?;
        }
    }
    let mut text = serde_json::to_string_pretty(&report).expect("JSON serialization cannot fail");
    text.push('\n');
    std::fs::write(&report_path, text).map_err(io_err(report_path.display().to_string()))?;
    println!("report written to {}", report_path.display());

    // A stall or failed enforced check in either run still fails the command.
    a.status_error().or_else(|| b.status_error()).map_or(Ok(()), Err)
}

fn cmd_sweep(path: &Path, param: &str, values: &str) -> Result<()> {
    let base_text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base_cfg = parse_config_str(&base_text)?;
    let list: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if list.is_empty() {
        return Err(CliError::Config("sweep needs at least one value in --values".into()));
    }
    // Validate every derived config before launching any run.
    let mut jobs = Vec::new();
    for value in &list {
        let text = override_key(&base_text, param, value)?;
        let cfg = parse_config_str(&text)
            .map_err(|e| CliError::Config(format!("{param} = {value}: {e}")))?;
        jobs.push((value.to_string(), cfg));
    }
    let root = env_out().unwrap_or_else(|| PathBuf::from(&base_cfg.output_dir));

    let mut slots: Vec<Option<(String, Result<artifacts::RunOutcome>)>> =
        (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (value, cfg) in &jobs {
            let dir = root.join(format!("{}={}", param.replace('.', "_"), value));
            handles.push(scope.spawn(move || execute_run(cfg, &dir)));
        }
        for (slot, ((value, _), handle)) in
            slots.iter_mut().zip(jobs.iter().zip(handles)).rev()
        {
            // A panicking run must not poison the whole sweep report.
            let result = match handle.join() {
                Ok(r) => r,
                Err(_) => Err(CliError::Stall("run thread panicked".into())),
            };
            *slot = Some((value.clone(), result));
        }
    });

    let mut runs = Vec::new();
    let mut worst = 0;
    for entry in slots.into_iter().flatten() {
        let (value, result) = entry;
        let dir = root.join(format!("{}={}", param.replace('.', "_"), value));
        let row = match &result {
            Ok(outcome) => {
                let status = outcome.status_error();
                let code = status.as_ref().map_or(0, CliError::exit_code);
                worst = worst.max(code);
                json!({
                    "value": value,
                    "dir": dir.display().to_string(),
                    "exit_code": code,
                    "stalled": outcome.stalled,
                    "wall_clock_sec": outcome.wall_clock,
                    "checks": outcome
                        .checks
                        .iter()
                        .map(|c| json!({ "id": c.id, "passed": c.passed }))
                        .collect::<Vec<_>>(),
                })
            }
            Err(e) => {
                worst = worst.max(e.exit_code());
                json!({
                    "value": value,
                    "dir": dir.display().to_string(),
                    "exit_code": e.exit_code(),
                    "error": e.to_string(),
                })
            }
        };
        println!(
            "sweep {param} = {value}: exit {}",
            row["exit_code"].as_i64().unwrap_or(1)
        );
        runs.push(row);
    }

    std::fs::create_dir_all(&root).map_err(io_err(root.display().to_string()))?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "param": param,
        "base_config": base_cfg.echo(),
        "runs": runs,
        "versions": { "aggdiff-cli": env!("CARGO_PKG_VERSION"), "aggdiff": aggdiff::VERSION },
    });
    let sweep_path = root.join("sweep.json");
    let mut text = serde_json::to_string_pretty(&report).expect("JSON serialization cannot fail");
    text.push('\n');
    std::fs::write(&sweep_path, text).map_err(io_err(sweep_path.display().to_string()))?;

    match worst {
        0 => Ok(()),
        1 => Err(CliError::Config("at least one sweep run had a config error".into())),
        2 => Err(CliError::Stall("at least one sweep run stalled".into())),
        _ => Err(CliError::ChecksFailed("at least one sweep run failed its checks".into())),
    }
}

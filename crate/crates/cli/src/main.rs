//! `plasmahom run | validate | version`.
//!
//! Exit status: 0 on success, 2 for an invalid configuration, 3 when a
//! solver or the artifact writer fails. One JSON summary line goes to
//! standard output; diagnostics go to standard error.

mod config;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{load, Issue, SCHEMA_VERSION};
use output::{Artifacts, Provenance, ARTIFACT_VERSION};

const EXIT_INVALID: u8 = 2;
const EXIT_FAILED: u8 = 3;
const THREADS_ENV: &str = "PLASMAHOM_THREADS";

#[derive(Parser)]
#[command(name = "plasmahom", version, about = "Effective permittivity of plasmonic crystals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task described by a JSON configuration.
    Run {
        config: PathBuf,
        /// Override a configuration value, e.g. `--set solver.h=0.01`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a configuration without running any solver.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print version information as JSON.
    Version,
}

fn emit(v: serde_json::Value) {
    println!("{v}");
}

fn invalid(issues: &[Issue]) -> ExitCode {
    for i in issues {
        eprintln!("error: {i}");
    }
    emit(json!({ "status": "invalid", "issues": issues }));
    ExitCode::from(EXIT_INVALID)
}

/// Thread count from the environment, else the configuration; 0 means the
/// runtime default.
fn threads(configured: usize) -> Result<usize, Issue> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Issue {
            path: THREADS_ENV.into(),
            message: format!("expected a non-negative integer, got `{s}`"),
        }),
        Err(_) => Ok(configured),
    }
}

fn run(path: PathBuf, overrides: Vec<String>) -> ExitCode {
    let loaded = match load(&path, &overrides) {
        Ok(l) => l,
        Err(issues) => return invalid(&issues),
    };
    let n = match threads(loaded.config.solver.parallelism) {
        Ok(n) => n,
        Err(i) => return invalid(&[i]),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        eprintln!("warning: thread pool already set up: {e}");
    }
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let task = loaded.config.task.name();
    let failed = |msg: String, artifacts: &[String]| {
        eprintln!("error: {msg}");
        emit(json!({
            "status": "failed",
            "task": task,
            "error": msg,
            "config_sha256": loaded.sha256,
            "overrides": loaded.overrides,
            "artifacts": artifacts,
        }));
        ExitCode::from(EXIT_FAILED)
    };
    let mut out = match Artifacts::create(&loaded.output_dir(), Provenance::new(&loaded.sha256)) {
        Ok(a) => a,
        Err(e) => return failed(format!("cannot create {}: {e}", loaded.output_dir().display()), &[]),
    };
    // effective configuration, re-runnable as is
    let mut effective = serde_json::to_vec_pretty(&loaded.value).expect("JSON values serialise");
    effective.push(b'\n');
    if let Err(e) = out.write_bytes("config.json", &effective) {
        return failed(format!("writing artifacts: {e}"), &[]);
    }
    match tasks::run(&loaded, &mut out) {
        Ok(result) => {
            emit(json!({
                "status": "ok",
                "task": task,
                "config_sha256": loaded.sha256,
                "overrides": loaded.overrides,
                "threads": rayon::current_num_threads(),
                "output_dir": out.dir(),
                "artifacts": out.written(),
                "warnings": loaded.warnings,
                "result": result,
            }));
            ExitCode::SUCCESS
        }
        Err(e) => failed(e.to_string(), out.written()),
    }
}

fn validate(path: PathBuf, overrides: Vec<String>) -> ExitCode {
    match load(&path, &overrides) {
        Ok(l) => {
            emit(json!({
                "status": "valid",
                "task": l.config.task.name(),
                "config_sha256": l.sha256,
                "issues": [],
                "warnings": l.warnings,
            }));
            ExitCode::SUCCESS
        }
        Err(issues) => invalid(&issues),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, overrides } => run(config, overrides),
        Command::Validate { config, overrides } => validate(config, overrides),
        Command::Version => {
            emit(json!({
                "name": "plasmahom",
                "version": env!("CARGO_PKG_VERSION"),
                "artifact_version": ARTIFACT_VERSION,
                "config_schema_version": SCHEMA_VERSION,
                "mesh_format": plasmahom::geometry::MESH_FORMAT_HEADER,
                "field_dump_version": plasmahom::macrosolver::FIELD_VERSION,
            }));
            ExitCode::SUCCESS
        }
    }
}

//! `curator`: measure and mitigate translationese in parallel corpora.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage or
//! configuration problem. Every run with a known output directory leaves a
//! `run-meta.json` there, including failed runs.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use curator::inference::canonical_json;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use commands::{Command, Outputs};
use config::{Endpoint, Settings};

#[derive(Debug, Parser)]
#[command(name = "curator", version, about = "Measure and mitigate translationese in parallel corpora")]
struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

enum Failure {
    Usage(Vec<String>),
    Runtime(anyhow::Error),
}

fn settings_for(cli: &Cli) -> Result<Settings, Failure> {
    let file = match &cli.config {
        Some(path) => Settings::load(path).map_err(|e| Failure::Usage(vec![format!("{e:#}")]))?,
        None => Settings::default(),
    };
    let settings = Settings::merge(cli.settings.clone(), file);
    let mut problems = settings.validate(cli.command.needs());
    problems.extend(cli.command.validate());
    if problems.is_empty() {
        Ok(settings)
    } else {
        Err(Failure::Usage(problems))
    }
}

/// Hash of everything that determines a run's outputs; the output directory
/// is excluded so identical runs into different places hash the same.
fn config_hash(command: &Command, settings: &Settings) -> String {
    let identity = json!({
        "command": command.name(),
        "args": serde_json::to_value(command).unwrap_or(Value::Null),
        "settings": serde_json::to_value(settings.hashed()).unwrap_or(Value::Null),
    });
    hex::encode(Sha256::digest(canonical_json(&identity).as_bytes()))
}

fn write_run_meta(out: &Path, command: &Command, settings: &Settings, outputs: &[String], error: Option<&Value>) -> Result<()> {
    let endpoints: serde_json::Map<String, Value> = [Endpoint::Chat, Endpoint::Score, Endpoint::Sidecar]
        .into_iter()
        .filter_map(|e| settings.endpoint_summary(e).map(|s| (e.name().to_string(), json!(s))))
        .collect();
    let mut outputs = outputs.to_vec();
    outputs.sort();
    let meta = json!({
        "command": command.name(),
        "config_hash": config_hash(command, settings),
        "seed": settings.seed(),
        "endpoints": endpoints,
        "status": if error.is_none() { "ok" } else { "error" },
        "error": error,
        "outputs": outputs,
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    std::fs::write(out.join("run-meta.json"), text).context("writing run-meta.json")
}

fn error_json(failure: &Failure) -> Value {
    match failure {
        Failure::Usage(problems) => json!({ "status": "error", "kind": "usage", "problems": problems }),
        Failure::Runtime(e) => json!({ "status": "error", "kind": "runtime", "message": format!("{e:#}") }),
    }
}

fn execute(cli: &Cli, settings: &Settings, out_dir: &Path) -> (Vec<String>, Result<()>) {
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return (Vec::new(), Err(e).with_context(|| format!("creating {}", out_dir.display())));
    }
    let mut outputs = Outputs::new(out_dir.to_path_buf());
    let result = commands::run(&cli.command, settings, &mut outputs);
    (outputs.written, result)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (settings, failure) = match settings_for(&cli) {
        Ok(s) => (s, None),
        Err(f) => {
            let file = cli.config.as_deref().and_then(|p| Settings::load(p).ok()).unwrap_or_default();
            (Settings::merge(cli.settings.clone(), file), Some(f))
        }
    };

    let (outputs, failure) = match failure {
        Some(f) => (Vec::new(), Some(f)),
        None => {
            let out = settings.out.clone().expect("validated");
            let (written, result) = execute(&cli, &settings, &out);
            (written, result.err().map(Failure::Runtime))
        }
    };

    let error = failure.as_ref().map(error_json);
    if let Some(out) = &settings.out {
        if std::fs::create_dir_all(out).is_ok() {
            if let Err(e) = write_run_meta(out, &cli.command, &settings, &outputs, error.as_ref()) {
                eprintln!("{}", json!({ "status": "error", "kind": "runtime", "message": format!("{e:#}") }));
                return ExitCode::from(1);
            }
        }
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            eprintln!("{}", error.expect("set with failure"));
            ExitCode::from(if matches!(f, Failure::Usage(_)) { 2 } else { 1 })
        }
    }
}

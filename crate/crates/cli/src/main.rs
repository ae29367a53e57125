use std::path::PathBuf;
use std::process::ExitCode;

use cbbsd::config::{parse_config_with, ConfigError, Overrides};
use cbbsd::experiment::run_experiment;
use clap::Parser;
use serde_json::json;

/// Simulate combinatorial blocking bandits with stochastic delays and
/// measure regret against exact and relaxed baselines.
#[derive(Debug, Parser)]
#[command(name = "cbbsd", version)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<u64>,
    /// Horizon T.
    #[arg(long)]
    horizon: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved config without running.
    #[arg(long)]
    dry_run: bool,
}

fn fail(code: u8, kind: &str, message: String, details: serde_json::Value) -> ExitCode {
    let report = json!({"error": {"kind": kind, "message": message, "details": details}});
    eprintln!("{report}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                2,
                "io",
                format!("cannot read {}: {e}", cli.config.display()),
                json!(null),
            )
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        runs: cli.runs,
        horizon: cli.horizon,
        out: cli.out,
    };
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let config = match parse_config_with(&text, &base, &overrides) {
        Ok(c) => c,
        Err(e) => {
            let details = match &e {
                ConfigError::Parse { line, column, .. } => json!({"line": line, "column": column}),
                ConfigError::Validation(issues) => json!(issues),
                ConfigError::Io { path, .. } => json!({"path": path}),
            };
            let kind = match e {
                ConfigError::Parse { .. } => "parse",
                ConfigError::Validation(_) => "validation",
                ConfigError::Io { .. } => "io",
            };
            return fail(2, kind, e.to_string(), details);
        }
    };
    if cli.dry_run {
        println!("{}", config.to_json_pretty());
        return ExitCode::SUCCESS;
    }
    match run_experiment(&config) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => fail(1, e.kind(), e.to_string(), json!(null)),
    }
}

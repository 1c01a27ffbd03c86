use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use frackpp::experiment::{run_experiment, Config, ExperimentConfig, Scenario};

/// Run one fractional KPP / porous-medium experiment and print its JSON summary.
#[derive(Parser)]
#[command(name = "frackpp", version)]
struct Cli {
    /// kernel-table, barenblatt, lower-bound, kpp-run, kpp-rate, certificate,
    /// selfsim, reaction-only, fpme-run or fit-rate
    scenario: Scenario,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn run(cli: Cli) -> frackpp::Result<bool> {
    let mut config = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for s in &cli.sets {
        config.set(s)?;
    }
    let report = run_experiment(&ExperimentConfig::new(cli.scenario, config)?)?;
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    for k in &report.unused_keys {
        eprintln!("warning: config key `{k}` was not used by {}", cli.scenario);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

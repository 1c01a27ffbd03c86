//! Drives a configured scenario programmatically, as the `frackpp` binary
//! does, and prints the checks from its summary.

use frackpp::experiment::{run_experiment, Config, ExperimentConfig, Scenario};

fn main() -> frackpp::Result<()> {
    let dir = std::env::temp_dir().join("frackpp-example");
    let mut config = Config::parse(
        "# linear diffusion, logistic reaction\n\
         m = 1\n\
         reaction = logistic\n\
         grid.points = 2048\n\
         grid.half_length = 1024\n\
         stepper.t_end = 10\n",
    )?;
    config.set(&format!("output.dir={}", dir.display()))?;
    let ec = ExperimentConfig::new(Scenario::KppRate, config)?;
    let report = run_experiment(&ec)?;
    for c in &report.checks {
        println!("{:<24} {:>12.6} {:<24} {}", c.name, c.value, c.rule, if c.passed { "ok" } else { "FAIL" });
    }
    println!("files: {:?}", report.files);
    Ok(())
}

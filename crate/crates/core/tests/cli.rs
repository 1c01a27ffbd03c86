use std::path::Path;
use std::process::Command;

use frackpp::experiment::{read_trace_radii, run_experiment, Config, ExperimentConfig, Scenario};
use frackpp::Error;
use serde_json::Value;

fn frackpp(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_frackpp"))
        .args(args)
        .arg("--set")
        .arg(format!("output.dir={}", dir.display()))
        .output()
        .expect("binary runs");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json)
}

fn experiment(scenario: Scenario, dir: &Path, sets: &[&str]) -> frackpp::Result<frackpp::experiment::ExitReport> {
    let mut c = Config::default();
    for s in sets {
        c.set(s)?;
    }
    c.set(&format!("output.dir={}", dir.display()))?;
    run_experiment(&ExperimentConfig::new(scenario, c)?)
}

#[test]
fn kernel_table_tail_ratio_tends_to_one_over_pi() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = frackpp(dir.path(), &["kernel-table", "--set", "kernel.points=121"]);
    assert_eq!(code, 0, "{json}");
    let text = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("r,f,tail_ratio,bracket"));
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[2] * std::f64::consts::PI - 1.0).abs() < 1e-6);
    assert!(text.starts_with("# "), "resolved config header");
    assert!(text.contains("# s = 0.5"));
}

#[test]
fn invalid_parameter_names_its_key() {
    let dir = tempfile::tempdir().unwrap();
    match experiment(Scenario::KernelTable, dir.path(), &["s=1.5"]) {
        Err(Error::InvalidParameter { key, .. }) => assert_eq!(key, "s"),
        other => panic!("{other:?}"),
    }
    let out = Command::new(env!("CARGO_BIN_EXE_frackpp"))
        .args(["kernel-table", "--set", "s=1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`s`"));
}

#[test]
fn config_file_with_overrides_and_unused_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# reaction-only sweep\nreaction.tail = gaussian\nreaction.level = 0.25\ntypo.key = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let (code, json) = frackpp(
        &out_dir,
        &["reaction-only", "--config", cfg.to_str().unwrap(), "--set", "reaction.level=0.5"],
    );
    assert_eq!(code, 0);
    assert_eq!(json["config"]["reaction.level"], "0.5");
    assert_eq!(json["config"]["reaction.tail"], "gaussian");
    assert_eq!(json["unused_keys"], serde_json::json!(["typo.key"]));
    assert_eq!(json["results"]["slope"].as_f64().map(|v| (v - 1.0).abs() < 1e-10), Some(true));
}

#[test]
fn outputs_are_deterministic_for_a_fixed_seed() {
    let sets = ["initial.noise=0.2", "seed=11", "grid.points=1024", "grid.half_length=256", "stepper.t_end=3"];
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fix = |d: &Path| -> Vec<String> {
        let mut v: Vec<&str> = sets.to_vec();
        let dir = format!("output.dir={}", d.display());
        v.push(&dir);
        let mut c = Config::default();
        for s in v {
            c.set(s).unwrap();
        }
        run_experiment(&ExperimentConfig::new(Scenario::KppRun, c).unwrap()).unwrap();
        ["trace.csv", "summary.json"]
            .iter()
            .map(|f| std::fs::read_to_string(d.join(f)).unwrap().replace(&d.display().to_string(), "DIR"))
            .collect()
    };
    let (ra, rb) = (fix(a.path()), fix(b.path()));
    assert_eq!(ra, rb);
    // a different seed changes the data
    experiment(
        Scenario::KppRun,
        c.path(),
        &["initial.noise=0.2", "seed=12", "grid.points=1024", "grid.half_length=256", "stepper.t_end=3"],
    )
    .unwrap();
    let rc = std::fs::read_to_string(c.path().join("trace.csv")).unwrap().replace(&c.path().display().to_string(), "DIR");
    assert_ne!(ra[0], rc);
}

#[test]
fn kpp_rate_summary_and_fit_rate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = frackpp(dir.path(), &["kpp-rate"]);
    assert_eq!(code, 0, "{json}");
    let fit = &json["results"]["fits"][0];
    let (rate, target, gap) = (
        fit["rate"].as_f64().unwrap(),
        fit["target"].as_f64().unwrap(),
        fit["relative_gap"].as_f64().unwrap(),
    );
    assert_eq!(target, 0.5);
    assert!((gap - (rate - target).abs() / target).abs() < 1e-14);

    let trace = dir.path().join("trace.csv");
    let (t, r) = read_trace_radii(&trace, 0.5).unwrap();
    assert_eq!(t.len(), r.len());
    let refit_dir = dir.path().join("refit");
    let window = format!("fit.window={},{}", fit["window"][0], fit["window"][1]);
    let (code, refit) = frackpp(
        &refit_dir,
        &["fit-rate", "--set", &format!("fit.input={}", trace.display()), "--set", &window],
    );
    assert_eq!(code, 0);
    assert!((refit["results"]["rate"].as_f64().unwrap() - rate).abs() < 1e-12);
}

#[test]
fn failing_tolerance_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let (code, json) = frackpp(dir.path(), &["fpme-run", "--set", "fpme.mass_tolerance=0"]);
    assert_eq!(json["passed"], false);
    assert_eq!(code, 1);
}

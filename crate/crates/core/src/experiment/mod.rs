//! Reproducible experiments: configuration, orchestration and output.
//!
//! A run reads a flat `key = value` configuration (see [`Config`]), fills
//! scenario defaults, executes one scenario and writes CSV files plus a
//! `summary.json` into the output directory. Every file carries the fully
//! resolved configuration as a header.

mod config;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::Config;

use crate::diffusion::{
    barenblatt_run, run_fpme, verify_lower_parabolic_estimate, verify_mass_scaling, BarenblattConfig,
    ProfileConstants, Scheme, StepperConfig,
};
use crate::error::{invalid, Error, Result};
use crate::front::{
    certificate_run, default_fit_window, fit_rate, fit_rate_samples, level_radius, positivity_floor_check,
    reaction_only_levels, ReactionTail,
};
use crate::grid::{Field, Grid};
use crate::heat_kernel::{asymptotic_constant, derivative_tail_check, kernel_profile, log_radii, tail_fit};
use crate::initial::{gaussian, power_tail, smooth_plateau};
use crate::kpp::{run_kpp, KppOptions, KppRun, Splitting};
use crate::params::{classify_regime, critical_exponents, ModelParams, ReactionSpec, Regime};
use crate::selfsim::{profile_derivative_bound, profile_etas, selfsim_evolution_check, selfsim_profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    KernelTable,
    Barenblatt,
    LowerBound,
    KppRun,
    KppRate,
    Certificate,
    Selfsim,
    ReactionOnly,
    FpmeRun,
    FitRate,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::KernelTable,
        Scenario::Barenblatt,
        Scenario::LowerBound,
        Scenario::KppRun,
        Scenario::KppRate,
        Scenario::Certificate,
        Scenario::Selfsim,
        Scenario::ReactionOnly,
        Scenario::FpmeRun,
        Scenario::FitRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::KernelTable => "kernel-table",
            Scenario::Barenblatt => "barenblatt",
            Scenario::LowerBound => "lower-bound",
            Scenario::KppRun => "kpp-run",
            Scenario::KppRate => "kpp-rate",
            Scenario::Certificate => "certificate",
            Scenario::Selfsim => "selfsim",
            Scenario::ReactionOnly => "reaction-only",
            Scenario::FpmeRun => "fpme-run",
            Scenario::FitRate => "fit-rate",
        }
    }

    /// Scenario defaults, applied below the file and `--set` values.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Scenario::KernelTable => &[("s", "0.5")],
            Scenario::Barenblatt => &[
                ("m", "2"),
                ("grid.points", "4096"),
                ("grid.half_length", "2000"),
                ("stepper.dt", "0.02"),
                ("stepper.t_end", "400"),
            ],
            Scenario::LowerBound => &[
                ("m", "2"),
                ("grid.points", "4096"),
                ("grid.half_length", "50"),
                ("stepper.dt", "1e-4"),
                ("initial.kind", "bump"),
                ("initial.height", "1.2"),
                ("initial.radius", "1"),
                ("initial.width", "0.6"),
            ],
            Scenario::KppRun | Scenario::KppRate => &[
                ("m", "0.75"),
                ("reaction", "logistic"),
                ("grid.points", "8192"),
                ("grid.half_length", "4096"),
                ("stepper.dt", "0.01"),
                ("stepper.t_end", "15"),
                ("stepper.snapshot_every", "0.25"),
            ],
            Scenario::Certificate => &[("m", "0.75"), ("reaction", "logistic")],
            Scenario::Selfsim => &[
                ("m", "1"),
                ("grid.points", "524288"),
                ("grid.half_length", "10000"),
                ("stepper.dt", "0.25"),
                ("stepper.snapshot_times", "0.5,1"),
            ],
            Scenario::ReactionOnly => &[("reaction", "logistic"), ("grid.points", "65536"), ("grid.half_length", "1000")],
            Scenario::FpmeRun => &[("m", "2"), ("initial.kind", "gaussian")],
            Scenario::FitRate => &[],
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                invalid("scenario", format!("unknown scenario `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub params: ModelParams,
    pub grid: Grid,
    pub stepper: StepperConfig,
    pub outputs: PathBuf,
    pub seed: u64,
    /// Raw configuration; scenario-specific keys are read from it.
    pub config: Config,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, config: Config) -> Result<Self> {
        let config = config.with_defaults(scenario.defaults());
        let params = model_params(&config)?;
        let grid = Grid::new(
            params.dim,
            config.get("grid.points", 1024usize)?,
            config.get("grid.half_length", 50.0)?,
        )?;
        let stepper = stepper_config(&config)?;
        let outputs = PathBuf::from(config.get("output.dir", format!("out/{}", scenario.name()))?);
        let seed = config.get("seed", 0u64)?;
        Ok(Self {
            scenario,
            params,
            grid,
            stepper,
            outputs,
            seed,
            config,
        })
    }

    pub fn from_file(scenario: Scenario, path: &Path, overrides: &[String]) -> Result<Self> {
        let mut config = Config::from_file(path)?;
        for o in overrides {
            config.set(o)?;
        }
        Self::new(scenario, config)
    }
}

fn model_params(c: &Config) -> Result<ModelParams> {
    let p = ModelParams::new(c.get("dim", 1usize)?, c.get("s", 0.5)?, c.get("m", 1.0)?)?;
    let a = c.get("fprime0", 1.0)?;
    let reaction = match c.get("reaction", "none".to_string())?.as_str() {
        "none" => None,
        "logistic" => Some(ReactionSpec::logistic(a)?),
        "damped-logistic" => Some(ReactionSpec::damped_logistic(a)?),
        other => {
            return Err(invalid(
                "reaction",
                format!("expected none, logistic or damped-logistic, got {other}"),
            ))
        }
    };
    Ok(match reaction {
        Some(r) => p.with_reaction(r),
        None => p,
    })
}

fn stepper_config(c: &Config) -> Result<StepperConfig> {
    let d = StepperConfig::default();
    let t_end = c.get("stepper.t_end", d.t_end)?;
    let mut snapshot_times = c.list("stepper.snapshot_times", &[])?;
    if let Some(every) = c.get_opt::<f64>("stepper.snapshot_every")? {
        if !(every > 0.0) {
            return Err(invalid("stepper.snapshot_every", "must be positive"));
        }
        let n = (t_end / every + 1e-9).floor() as usize;
        snapshot_times.extend((1..=n).map(|k| k as f64 * every));
    }
    let cfg = StepperConfig {
        scheme: c.get("stepper.scheme", "imex".to_string())?.parse::<Scheme>()?,
        dt: c.get("stepper.dt", d.dt)?,
        t_end,
        positivity_floor: c.get("stepper.positivity_floor", d.positivity_floor)?,
        snapshot_times,
        exact_linear: c.get("stepper.exact_linear", d.exact_linear)?,
        cfl: c.get_opt("stepper.cfl")?,
        max_growth: c.get("stepper.max_growth", d.max_growth)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Initial data from `initial.*` keys, with optional seeded multiplicative
/// noise `initial.noise`.
fn initial_data(c: &Config, grid: Grid, p: &ModelParams, seed: u64) -> Result<Field> {
    let kind = c.get("initial.kind", "bump".to_string())?;
    let mut u = match kind.as_str() {
        "bump" => {
            let r = c.get("initial.radius", 1.0)?;
            smooth_plateau(grid, c.get("initial.height", 1.0)?, r, r + c.get("initial.width", 1.0)?)?
        }
        "gaussian" => gaussian(grid, c.get("initial.amplitude", 1.0)?, c.get("initial.width", 1.0)?)?,
        "power-tail" => {
            let q = p.dim as f64 + 2.0 * p.s;
            let default = match classify_regime(p)? {
                Regime::R1 => 2.0 * p.s / (1.0 - p.m),
                _ => q,
            };
            power_tail(grid, c.get("initial.amplitude", 1.0)?, c.get("initial.exponent", default)?)?
        }
        "file" => {
            let path: String = c.require("initial.file")?;
            let u = Field::read_csv(BufReader::new(File::open(&path)?))?;
            if u.grid != grid {
                return Err(invalid("initial.file", "field grid differs from grid.* settings"));
            }
            u
        }
        other => {
            return Err(invalid(
                "initial.kind",
                format!("expected bump, gaussian, power-tail or file, got {other}"),
            ))
        }
    };
    let noise = c.get("initial.noise", 0.0)?;
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in u.values.iter_mut() {
            *v *= 1.0 + noise * rng.gen_range(-1.0..1.0);
        }
    }
    Ok(u)
}

/// One declared tolerance and its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    /// Human-readable acceptance rule.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn relative(name: &str, value: f64, target: f64, tol: f64) -> Self {
        let gap = (value - target).abs() / target.abs();
        Self {
            name: name.into(),
            value,
            target: Some(target),
            rule: format!("relative gap <= {tol}"),
            passed: gap <= tol,
        }
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            rule: format!("<= {limit}"),
            passed: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            rule: format!(">= {limit}"),
            passed: value >= limit,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            rule: format!("in [{lo:.6}, {hi:.6}]"),
            passed: value >= lo && value <= hi,
        }
    }
}

/// Outcome of [`run_experiment`]; `summary` is what `summary.json` holds.
#[derive(Debug, Clone, Serialize)]
pub struct ExitReport {
    pub scenario: Scenario,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub unused_keys: Vec<String>,
    pub summary: Value,
}

struct Outcome {
    results: Value,
    checks: Vec<Check>,
}

struct Outputs<'a> {
    dir: &'a Path,
    config: &'a Config,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    /// Creates `name` in the output directory with the resolved config as
    /// a `# key = value` header, then lets `body` write the rest.
    fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        for (k, v) in self.config.resolved() {
            writeln!(w, "# {k} = {v}")?;
        }
        body(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one experiment and writes its outputs. The report's `passed` is
/// true iff every declared tolerance holds.
pub fn run_experiment(ec: &ExperimentConfig) -> Result<ExitReport> {
    std::fs::create_dir_all(&ec.outputs)?;
    let mut out = Outputs {
        dir: &ec.outputs,
        config: &ec.config,
        files: Vec::new(),
    };
    let outcome = match ec.scenario {
        Scenario::KernelTable => kernel_table(ec, &mut out)?,
        Scenario::Barenblatt => barenblatt(ec, &mut out)?,
        Scenario::LowerBound => lower_bound(ec, &mut out)?,
        Scenario::KppRun => kpp(ec, &mut out, false)?,
        Scenario::KppRate => kpp(ec, &mut out, true)?,
        Scenario::Certificate => certificate(ec, &mut out)?,
        Scenario::Selfsim => selfsim(ec, &mut out)?,
        Scenario::ReactionOnly => reaction_only(ec, &mut out)?,
        Scenario::FpmeRun => fpme(ec, &mut out)?,
        Scenario::FitRate => fit_rate_scenario(ec)?,
    };
    let passed = outcome.checks.iter().all(|c| c.passed);
    let config: serde_json::Map<String, Value> = ec
        .config
        .resolved()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let unused = ec.config.unused();
    let summary_path = ec.outputs.join("summary.json");
    let mut files = out.files;
    files.push(summary_path.clone());
    let summary = json!({
        "scenario": ec.scenario,
        "passed": passed,
        "checks": outcome.checks,
        "results": outcome.results,
        "config": config,
        "unused_keys": unused,
        "files": files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let mut w = BufWriter::new(File::create(&summary_path)?);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(ExitReport {
        scenario: ec.scenario,
        passed,
        checks: outcome.checks,
        files,
        unused_keys: unused,
        summary,
    })
}

fn kernel_table(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let (s, dim) = (ec.params.s, ec.params.dim);
    let q = dim as f64 + 2.0 * s;
    let r_min = c.get("kernel.r_min", 1e-2)?;
    let r_max = c.get("kernel.r_max", 1e5)?;
    let points = c.get("kernel.points", 301usize)?;
    let tail_radii = log_radii(r_min, r_max, points);
    let mut radii = vec![0.0];
    radii.extend(&tail_radii);
    let profile = kernel_profile(s, dim, &radii)?;
    let c1 = asymptotic_constant(dim, s)?;
    let law = tail_fit(&profile, -q)?;
    let deriv = derivative_tail_check(s, dim, &tail_radii)?;
    let mass = profile.radial_mass()?;
    let mut checks = vec![
        Check::relative("tail_constant", law.constant, c1, 0.05),
        Check::relative("tail_exponent", law.exponent, -q, 0.05),
        Check::relative("derivative_exponent", deriv.law.exponent, -q, 0.05),
        Check::relative("derivative_constant", deriv.law.constant, deriv.predicted_constant, 0.10),
        Check::relative("mass", mass, 1.0, 1e-3),
    ];
    let closed = closed_form_kernel(s, dim);
    let mut closed_err = None;
    if let Some(f) = closed {
        let err = radii
            .iter()
            .zip(&profile.values)
            .filter(|(&r, _)| r <= 20.0)
            .map(|(&r, &v)| (v - f(r)).abs() / f(r))
            .fold(0.0, f64::max);
        checks.push(Check::at_most("closed_form_max_rel_error", err, 1e-6));
        closed_err = Some(err);
    }
    let mut bracket_err = None;
    if let (Some(f), Some(b)) = (closed, closed_form_bracket(s, dim)) {
        let err = deriv
            .radii
            .iter()
            .zip(&deriv.brackets)
            .filter(|(&r, _)| r <= 20.0)
            .map(|(&r, &v)| (v - b(r)).abs() / f(r))
            .fold(0.0, f64::max);
        checks.push(Check::at_most("closed_form_bracket_error", err, 1e-6));
        bracket_err = Some(err);
    }
    out.csv("kernel.csv", |w| {
        writeln!(w, "r,f,tail_ratio,bracket")?;
        for (i, (&r, &v)) in radii.iter().zip(&profile.values).enumerate() {
            let b = if i == 0 { f64::NAN } else { deriv.brackets[i - 1] };
            writeln!(w, "{r:.17e},{v:.17e},{:.17e},{b:.17e}", v * r.powf(q))?;
        }
        Ok(())
    })?;
    Ok(Outcome {
        results: json!({
            "c1": c1,
            "tail": law,
            "derivative": { "law": deriv.law, "predicted_constant": deriv.predicted_constant,
                            "time_increasing": deriv.time_increasing },
            "mass": mass,
            "closed_form_max_rel_error": closed_err,
            "closed_form_bracket_error": bracket_err,
        }),
        checks,
    })
}

/// The `s = 1/2` kernels in one and two dimensions.
pub fn closed_form_kernel(s: f64, dim: usize) -> Option<fn(f64) -> f64> {
    use std::f64::consts::PI;
    if s != 0.5 {
        return None;
    }
    match dim {
        1 => Some(|r| 1.0 / (PI * (1.0 + r * r))),
        2 => Some(|r| 1.0 / (2.0 * PI) * (1.0 + r * r).powf(-1.5)),
        _ => None,
    }
}

/// `N f + r f'` for the `s = 1/2` kernels.
pub fn closed_form_bracket(s: f64, dim: usize) -> Option<fn(f64) -> f64> {
    use std::f64::consts::PI;
    if s != 0.5 {
        return None;
    }
    match dim {
        1 => Some(|r| (1.0 - r * r) / (PI * (1.0 + r * r).powi(2))),
        2 => Some(|r| (2.0 - r * r) / (2.0 * PI) * (1.0 + r * r).powf(-2.5)),
        _ => None,
    }
}

fn barenblatt_config(ec: &ExperimentConfig) -> Result<BarenblattConfig> {
    let c = &ec.config;
    let mut bc = BarenblattConfig::new(ec.grid, ec.stepper.clone());
    bc.snapshot_fractions = c.list("barenblatt.fractions", &bc.snapshot_fractions)?;
    bc.tolerance = c.get("barenblatt.tolerance", bc.tolerance)?;
    let w = c.list("barenblatt.tail_window", &bc.tail_window)?;
    if w.len() != 2 {
        return Err(invalid("barenblatt.tail_window", "expects two fractions lo,hi"));
    }
    bc.tail_window = [w[0], w[1]];
    bc.collapse_extent = c.get("barenblatt.collapse_extent", bc.collapse_extent)?;
    bc.spread_time = c.get_opt("barenblatt.spread_time")?;
    Ok(bc)
}

fn barenblatt(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let p = ModelParams {
        reaction: None,
        ..ec.params.clone()
    };
    let bc = barenblatt_config(ec)?;
    let mass = c.get("barenblatt.mass", 1.0)?;
    let scaling_mass = c.get("barenblatt.mass_scaling", 0.0)?;
    let run = barenblatt_run(mass, &p, &bc)?;
    let mut checks = Vec::new();
    if run.regime == Regime::R1 {
        checks.push(Check::relative("tail_exponent", run.tail.exponent, run.expected_tail_exponent, 0.05));
    } else {
        checks.push(Check::at_most("collapse_residual", run.discrepancy, bc.tolerance));
        checks.push(Check::relative("tail_exponent", run.tail.exponent, run.expected_tail_exponent, 0.03));
    }
    let scaling = if scaling_mass > 0.0 {
        let rep = verify_mass_scaling(scaling_mass, &p, &bc)?;
        checks.push(Check::at_most("mass_scaling_violation", rep.max_violation, rep.tolerance));
        Some(rep)
    } else {
        None
    };
    out.csv("profile.csv", |w| {
        writeln!(w, "eta,F")?;
        for (r, v) in run.profile.radii.iter().zip(&run.profile.values) {
            writeln!(w, "{r:.17e},{v:.17e}")?;
        }
        Ok(())
    })?;
    Ok(Outcome {
        results: json!({ "run": run, "mass_scaling": scaling }),
        checks,
    })
}

fn lower_bound(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let p = ModelParams {
        reaction: None,
        ..ec.params.clone()
    };
    let u0 = initial_data(c, ec.grid, &p, ec.seed)?;
    let (t_min, t_max) = (c.get("lower.t_min", 0.01)?, c.get("lower.t_max", 0.1)?);
    let times = log_radii(t_min, t_max, c.get("lower.samples", 10usize)?);
    let rep = verify_lower_parabolic_estimate(&u0, &p, &ec.stepper, &times, c.get("lower.r_lo", 5.0)?)?;
    let q = p.dim as f64 + 2.0 * p.s;
    let checks = vec![
        Check::relative("spatial_exponent", rep.mean_spatial_exponent, -q, 0.05),
        Check::relative("time_exponent", rep.time_exponent, 1.0, 0.10),
        Check::at_least("c_star", rep.c_star, f64::MIN_POSITIVE),
    ];
    out.csv("lower_bound.csv", |w| {
        writeln!(w, "t,spatial_exponent,prefactor")?;
        for ((t, e), a) in rep.times.iter().zip(&rep.spatial_exponents).zip(&rep.prefactors) {
            writeln!(w, "{t:.17e},{e:.17e},{a:.17e}")?;
        }
        Ok(())
    })?;
    Ok(Outcome {
        results: serde_json::to_value(&rep)?,
        checks,
    })
}

/// Convergence-to-1 measurement on `|x| <= e^{sigma t}`: the final ball
/// minimum and the largest decrease over the last half of the horizon.
pub fn convergence_to_one(run: &KppRun, sigma: f64) -> (f64, f64) {
    let rep = positivity_floor_check(run, sigma, 0.0);
    let mins = &rep.ball_minima;
    let t_end = mins.last().map_or(0.0, |m| m.0);
    let late: Vec<f64> = mins.iter().filter(|m| m.0 >= 0.5 * t_end).map(|m| m.1).collect();
    let drop = late.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    (mins.last().map_or(0.0, |m| m.1), drop)
}

/// Rate acceptance per regime: `sigma_1` (15%) below `m_1`, `sigma_2`
/// (10%) on `(m_1, 1]`, and `[sigma_2 - 10%, sigma_3 + 10%]` above 1.
pub fn rate_check(p: &ModelParams, rate: f64) -> Result<Check> {
    let ex = critical_exponents(p)?;
    Ok(match classify_regime(p)? {
        Regime::R1 => Check::relative("rate", rate, ex.sigma1.expect("sigma1 in R1"), 0.15),
        Regime::R2 => Check::relative("rate", rate, ex.sigma2, 0.10),
        Regime::R3 => Check::within("rate", rate, 0.9 * ex.sigma2, 1.1 * ex.sigma3.expect("sigma3 in R3")),
    })
}

fn kpp(ec: &ExperimentConfig, out: &mut Outputs, rate: bool) -> Result<Outcome> {
    let c = &ec.config;
    let p = &ec.params;
    let default_kind = if classify_regime(p)? == Regime::R1 { "power-tail" } else { "bump" };
    let mut c0 = c.clone();
    if !c.contains("initial.kind") {
        c0 = c0.with_defaults(&[("initial.kind", default_kind)]);
    }
    let mut u0 = initial_data(&c0, ec.grid, p, ec.seed)?;
    for v in u0.values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let opts = KppOptions {
        splitting: c.get("kpp.splitting", "lie".to_string())?.parse::<Splitting>()?,
        level_targets: c.list("kpp.levels", &[0.5])?,
    };
    // initial.* keys were read through the clone
    for (k, v) in c0.resolved() {
        if k.starts_with("initial.") {
            let _ = c.get::<String>(&k, v);
        }
    }
    let run = run_kpp(&u0, p, &ec.stepper, &opts)?;
    let ex = critical_exponents(p)?;
    let mut fits = Vec::new();
    for &l in &opts.level_targets {
        let fit = default_fit_window(&run, l).and_then(|w| {
            let key = format!("kpp.fit_window.{l}");
            let window = if c.contains(&key) {
                match c.list(&key, &[])?.as_slice() {
                    [a, b] => [*a, *b],
                    _ => return Err(invalid(&key, "expects two times lo,hi")),
                }
            } else {
                w
            };
            fit_rate(&run, l, window, Some(rate_target(p)?))
        });
        fits.push(fit);
    }
    let max_u = run.trace.maxima.iter().copied().fold(0.0, f64::max);
    let min_u = run.trace.minima.iter().copied().fold(f64::INFINITY, f64::min);
    let mut checks = vec![
        Check::at_most("max_u", max_u, 1.0 + 1e-10),
        Check::at_least("min_u", min_u, 0.0),
    ];
    let mut conv = None;
    if rate {
        let level = c.get("kpp.rate_level", opts.level_targets[0])?;
        let j = opts
            .level_targets
            .iter()
            .position(|&l| l == level)
            .ok_or_else(|| invalid("kpp.rate_level", "must be one of kpp.levels"))?;
        match &fits[j] {
            Ok(f) => checks.push(rate_check(p, f.rate)?),
            Err(e) => return Err(Error::InsufficientSamples(format!("rate fit failed: {e}"))),
        }
        if classify_regime(p)? == Regime::R2 {
            let (final_min, drop) = convergence_to_one(&run, 0.5 * ex.sigma2);
            checks.push(Check::at_least("ball_min_final", final_min, 0.9));
            checks.push(Check::at_most("ball_min_late_decrease", drop, 1e-3));
            conv = Some(json!({ "sigma": 0.5 * ex.sigma2, "final_min": final_min, "late_decrease": drop }));
        }
    }
    out.csv("trace.csv", |w| run.write_csv(w, &[]))?;
    let fits_json: Vec<Value> = fits
        .iter()
        .map(|f| match f {
            Ok(f) => serde_json::to_value(f).unwrap_or(Value::Null),
            Err(e) => json!({ "error": e.to_string() }),
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "exponents": ex,
            "regime": classify_regime(p)?.label(),
            "fits": fits_json,
            "max_overshoot": run.max_overshoot,
            "clipped_mass": run.trace.clipped_mass,
            "steps": run.trace.steps,
            "convergence_to_one": conv,
        }),
        checks,
    })
}

fn rate_target(p: &ModelParams) -> Result<f64> {
    let ex = critical_exponents(p)?;
    Ok(match classify_regime(p)? {
        Regime::R1 => ex.sigma1.expect("sigma1 in R1"),
        _ => ex.sigma2,
    })
}

/// Unit-mass profile constants: from the kernel for `m = 1`, otherwise
/// from a Barenblatt run configured by `calibration.*` keys.
pub fn calibrate(p: &ModelParams, c: &Config) -> Result<ProfileConstants> {
    let p = ModelParams {
        reaction: None,
        ..p.clone()
    };
    if p.m == 1.0 {
        let mut radii = vec![0.0];
        radii.extend(log_radii(1e-2, c.get("calibration.r_max", 1e4)?, 200));
        return ProfileConstants::from_kernel(p.s, p.dim, &radii);
    }
    let (points, half, dt, t_end) = if p.m > 1.0 {
        (4096, 2000.0, 0.02, 400.0)
    } else {
        (4096, 3000.0, 0.01, 80.0)
    };
    let grid = Grid::new(
        p.dim,
        c.get("calibration.points", points)?,
        c.get("calibration.half_length", half)?,
    )?;
    let st = StepperConfig {
        dt: c.get("calibration.dt", dt)?,
        t_end: c.get("calibration.t_end", t_end)?,
        ..Default::default()
    };
    let run = barenblatt_run(1.0, &p, &BarenblattConfig::new(grid, st))?;
    ProfileConstants::from_run(&run, &p, c.get("calibration.extent", 0.5)?)
}

fn certificate(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let p = &ec.params;
    let fractions = c.list("certificate.sigma_fractions", &[0.25, 0.5, 0.75])?;
    let eps = c.get("certificate.eps", 1e-6)?;
    let rho0 = c.get("certificate.rho0", 2.0)?;
    let k_max = c.get("certificate.k_max", 20usize)?;
    let profile = calibrate(p, c)?;
    let sigma2 = critical_exponents(p)?.sigma2;
    let mut checks = Vec::new();
    let mut states = Vec::new();
    for &f in &fractions {
        let st = certificate_run(p, f * sigma2, eps, rho0, k_max, &profile)?;
        let floor = (st.sigma * st.t0).exp();
        let min_ratio = st.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let conv = (st.ratios.last().unwrap() / st.l_inf - 1.0).abs();
        checks.push(Check::at_least(&format!("accepted[{f}]"), st.accepted as u8 as f64, 1.0));
        checks.push(Check::at_least(&format!("min_ratio_over_floor[{f}]"), min_ratio / floor, 1.0 - 1e-12));
        checks.push(Check::at_most(&format!("ratio_convergence[{f}]"), conv, 0.01));
        states.push((f, st));
    }
    out.csv("certificate.csv", |w| {
        writeln!(w, "sigma_fraction,k,rho,L")?;
        for (f, st) in &states {
            for (k, (r, l)) in st.rho.iter().zip(&st.ratios).enumerate() {
                writeln!(w, "{f},{k},{r:.17e},{l:.17e}")?;
            }
        }
        Ok(())
    })?;
    Ok(Outcome {
        results: json!({
            "profile": profile,
            "states": states.iter().map(|(f, s)| json!({ "sigma_fraction": f, "state": s })).collect::<Vec<_>>(),
        }),
        checks,
    })
}

fn selfsim(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let s = ec.params.s;
    let gamma = c.get("selfsim.gamma", 0.5)?;
    let etas = profile_etas(
        c.get("selfsim.eta_min", 1e-2)?,
        c.get("selfsim.eta_max", 1e3)?,
        c.get("selfsim.points", 200usize)?,
    );
    let profile = selfsim_profile(gamma, s, ec.params.dim, &etas)?;
    let rep = profile_derivative_bound(&profile, gamma)?;
    let mut checks = vec![
        Check::at_most("monotone_violations", rep.monotone_violations as f64, 0.0),
        Check::at_most("tail_flatness", rep.tail_flatness, 0.05),
    ];
    let evolution = if ec.params.dim == 1 {
        let ev = selfsim_evolution_check(gamma, s, ec.grid, &ec.stepper)?;
        let worst = ev.profile_errors.iter().copied().fold(0.0, f64::max);
        checks.push(Check::at_most("collapse", ev.collapse, 0.03));
        checks.push(Check::at_most("profile_error", worst, 0.03));
        checks.push(Check::at_most("growth_exponent_gap", ev.growth_gap, 0.03));
        Some(ev)
    } else {
        None
    };
    out.csv("selfsim.csv", |w| {
        writeln!(w, "eta,F,tail_ratio,deriv_bound_ratio")?;
        for i in 0..profile.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                profile.radii[i], profile.values[i], rep.tail_ratio[i], rep.deriv_ratio[i]
            )?;
        }
        Ok(())
    })?;
    let mut summary = serde_json::to_value(&rep)?;
    if let Value::Object(map) = &mut summary {
        map.remove("tail_ratio");
        map.remove("deriv_ratio");
    }
    Ok(Outcome {
        results: json!({ "profile": summary, "evolution": evolution }),
        checks,
    })
}

fn reaction_only(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let p = &ec.params;
    let tail: ReactionTail = c.get("reaction.tail", "power".to_string())?.parse()?;
    let lambda = c.get("reaction.level", 0.5)?;
    let times = c.list("reaction.times", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])?;
    let radii = reaction_only_levels(tail, p, lambda, &times)?;
    let a = p.fprime0();
    let q = p.dim as f64 + 2.0 * p.s;
    // closed-form identities
    let identity = match tail {
        ReactionTail::Gaussian => times
            .iter()
            .zip(&radii)
            .map(|(t, r)| (r * r - radii[0] * radii[0] - a * (t - times[0])).abs() / (1.0 + r * r))
            .fold(0.0, f64::max),
        ReactionTail::Power => times
            .iter()
            .zip(&radii)
            .map(|(t, r)| (r.ln() - radii[0].ln() - a * (t - times[0]) / q).abs())
            .fold(0.0, f64::max),
    };
    let level_residual = times
        .iter()
        .zip(&radii)
        .map(|(&t, &r)| (tail.initial(p, r) * (a * t).exp() / lambda - 1.0).abs())
        .fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most("closed_form_identity", identity, 1e-10),
        Check::at_most("level_residual", level_residual, 1e-10),
    ];
    // grid measurement of the same level sets
    let mut measured = Vec::new();
    if lambda < 1.0 {
        let h = ec.grid.spacing();
        let mut worst = 0.0_f64;
        for (&t, &r) in times.iter().zip(&radii) {
            if r > 0.9 * ec.grid.half_length() {
                measured.push(f64::NAN);
                continue;
            }
            let g = (a * t).exp();
            let u = Field::from_radial(ec.grid, |x| tail.initial(p, x) * g);
            let rg = level_radius(&u, lambda)?;
            worst = worst.max((rg - r).abs());
            measured.push(rg);
        }
        checks.push(Check::at_most("grid_radius_error", worst, 2.0 * h));
    }
    out.csv("reaction_only.csv", |w| {
        writeln!(w, "t,R_closed,R_grid")?;
        for (i, (t, r)) in times.iter().zip(&radii).enumerate() {
            let m = measured.get(i).copied().unwrap_or(f64::NAN);
            writeln!(w, "{t:.17e},{r:.17e},{m:.17e}")?;
        }
        Ok(())
    })?;
    let slope = if times.len() >= 2 {
        let n = times.len() - 1;
        Some(match tail {
            ReactionTail::Power => (radii[n].ln() - radii[0].ln()) / (times[n] - times[0]),
            ReactionTail::Gaussian => (radii[n].powi(2) - radii[0].powi(2)) / (times[n] - times[0]),
        })
    } else {
        None
    };
    Ok(Outcome {
        results: json!({ "tail": tail, "level": lambda, "times": times, "radii": radii,
                         "measured": measured, "slope": slope }),
        checks,
    })
}

fn fpme(ec: &ExperimentConfig, out: &mut Outputs) -> Result<Outcome> {
    let c = &ec.config;
    let p = ModelParams {
        reaction: None,
        ..ec.params.clone()
    };
    let u0 = initial_data(c, ec.grid, &p, ec.seed)?;
    let trace = run_fpme(&u0, &p, &ec.stepper)?;
    let tol = c.get("fpme.mass_tolerance", 1e-7)?;
    let checks = vec![Check::at_most("mass_drift", trace.mass_drift(), tol)];
    out.csv("trace.csv", |w| {
        writeln!(w, "t,mass,max,min")?;
        for i in 0..trace.times.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                trace.times[i], trace.masses[i], trace.maxima[i], trace.minima[i]
            )?;
        }
        Ok(())
    })?;
    let last = trace.final_field().expect("final snapshot").clone();
    out.csv("final.csv", |w| last.write_csv(w, &[]))?;
    Ok(Outcome {
        results: serde_json::to_value(&trace)?,
        checks,
    })
}

/// Reads `t` and `R_<level>` columns from a trace CSV.
pub fn read_trace_radii(path: &Path, level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut header: Option<(usize, usize)> = None;
    let (mut ts, mut rs) = (Vec::new(), Vec::new());
    let bad = |m: String| Error::Format(format!("{}: {m}", path.display()));
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        match header {
            None => {
                let t = cols.iter().position(|c| *c == "t").ok_or_else(|| bad("no `t` column".into()))?;
                let r = cols
                    .iter()
                    .position(|c| c.strip_prefix("R_").and_then(|x| x.parse::<f64>().ok()) == Some(level))
                    .ok_or_else(|| bad(format!("no `R_{level}` column")))?;
                header = Some((t, r));
            }
            Some((t, r)) => {
                let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
                ts.push(parse(cols.get(t).ok_or_else(|| bad("short row".into()))?)?);
                rs.push(parse(cols.get(r).ok_or_else(|| bad("short row".into()))?)?);
            }
        }
    }
    Ok((ts, rs))
}

fn fit_rate_scenario(ec: &ExperimentConfig) -> Result<Outcome> {
    let c = &ec.config;
    let path: String = c.require("fit.input")?;
    let level = c.get("fit.level", 0.5)?;
    let (ts, rs) = read_trace_radii(Path::new(&path), level)?;
    let t_end = ts.last().copied().ok_or_else(|| Error::InsufficientSamples("empty trace".into()))?;
    let w = c.list("fit.window", &[0.5 * t_end, 0.9 * t_end])?;
    if w.len() != 2 {
        return Err(invalid("fit.window", "expects two times lo,hi"));
    }
    let target = c.get_opt::<f64>("fit.target")?;
    let fit = fit_rate_samples(&ts, &rs, level, [w[0], w[1]], target)?;
    let mut checks = Vec::new();
    if let (Some(t), Some(tol)) = (target, c.get_opt::<f64>("fit.tolerance")?) {
        checks.push(Check::relative("rate", fit.rate, t, tol));
    }
    Ok(Outcome {
        results: serde_json::to_value(&fit)?,
        checks,
    })
}

//! The fractional porous-medium / fast-diffusion equation
//! `u_t + (-Delta)^s u^m = 0` on a periodic grid.

mod barenblatt;
mod lower_bound;
mod stepper;

use serde::Serialize;

pub use barenblatt::{
    barenblatt_profile, barenblatt_run, collapse_discrepancy, expected_tail_exponent, rescale,
    tail_correction_exponent, verify_mass_scaling, BarenblattConfig, BarenblattRun, MassScalingReport, ProfileConstants,
    TailModel,
};
pub use lower_bound::{verify_lower_parabolic_estimate, LowerBoundReport};
pub use stepper::{DiffusionStepper, Scheme, StepperConfig, DEFAULT_POSITIVITY_FLOOR, EXPLICIT_CFL};

use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};
use crate::params::ModelParams;

/// Per-step diagnostics of a run plus the requested snapshots.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolutionTrace {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<Field>,
    pub clipped_mass: f64,
    pub steps: usize,
}

impl SolutionTrace {
    pub(crate) fn record(&mut self, u: &Field) {
        self.times.push(u.time);
        self.masses.push(u.mass());
        self.maxima.push(u.max());
        self.minima.push(u.min());
    }

    /// Largest `|mass - mass_0| / mass_0` over the run.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.masses.first().copied().unwrap_or(0.0);
        if m0 == 0.0 {
            return 0.0;
        }
        self.masses.iter().map(|m| (m - m0).abs() / m0.abs()).fold(0.0, f64::max)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn final_field(&self) -> Option<&Field> {
        self.snapshots.last()
    }
}

fn check_input(u: &Field, p: &ModelParams) -> Result<()> {
    p.validate()?;
    if u.grid.dim() != p.dim {
        return Err(invalid("grid.dim", format!("grid is {}D but the model has N = {}", u.grid.dim(), p.dim)));
    }
    u.check_finite()?;
    if let Some(i) = u.values.iter().position(|&v| v < 0.0) {
        return Err(invalid("u0", format!("negative value {} at index {i}", u.values[i])));
    }
    Ok(())
}

/// One step of length `cfg.dt` (substepped if the stability cap is smaller).
pub fn step_fpme(u: &Field, p: &ModelParams, cfg: &StepperConfig) -> Result<Field> {
    check_input(u, p)?;
    let mut stepper = DiffusionStepper::new(u.grid, p.s, p.m, cfg.clone())?;
    let mut values = u.values.clone();
    let mut t = 0.0;
    while t < cfg.dt * (1.0 - 1e-12) {
        t += stepper.step(&mut values, cfg.dt - t)?;
    }
    Field::new(u.grid, values, u.time + cfg.dt)
}

/// Evolves `u0` from `u0.time` to `cfg.t_end`, landing exactly on every
/// snapshot time in range. The final state is always the last snapshot.
pub fn run_fpme(u0: &Field, p: &ModelParams, cfg: &StepperConfig) -> Result<SolutionTrace> {
    check_input(u0, p)?;
    let stepper = DiffusionStepper::new(u0.grid, p.s, p.m, cfg.clone())?;
    evolve(u0, stepper, cfg, |_, _, _| Ok(()))
}

/// Where a hook of [`evolve`] runs relative to the diffusion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Before,
    After,
}

/// Shared time loop: `hook` runs before and after every diffusion step of
/// length `h` and may modify the state (used for the reaction substeps).
pub(crate) fn evolve(
    u0: &Field,
    mut stepper: DiffusionStepper,
    cfg: &StepperConfig,
    mut hook: impl FnMut(Stage, &mut Vec<f64>, f64) -> Result<()>,
) -> Result<SolutionTrace> {
    let mut targets: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > u0.time && t < cfg.t_end)
        .collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut trace = SolutionTrace::default();
    let mut u = u0.clone();
    trace.record(&u);
    if cfg.snapshot_times.iter().any(|&t| (t - u0.time).abs() <= 1e-12) {
        trace.snapshots.push(u.clone());
    }
    for target in targets {
        while u.time < target - 1e-12 * target.max(1.0) {
            let want = cfg.dt.min(target - u.time);
            let h = stepper.admissible_dt(&u.values, want);
            hook(Stage::Before, &mut u.values, h)?;
            stepper.step_exact(&mut u.values, h).map_err(|e| with_time(e, u.time))?;
            hook(Stage::After, &mut u.values, h)?;
            u.time = if h == want { target.min(u.time + h) } else { u.time + h };
            trace.record(&u);
        }
        u.time = target;
        trace.snapshots.push(u.clone());
    }
    trace.clipped_mass = stepper.clipped_mass;
    trace.steps = stepper.steps;
    Ok(trace)
}

fn with_time(e: crate::Error, time: f64) -> crate::Error {
    match e {
        crate::Error::Instability { step, growth, .. } => crate::Error::Instability { step, time, growth },
        other => other,
    }
}

/// Discrete point mass `M` at the origin, spread by the linear kernel for
/// time `t0`. Gibbs undershoots are clipped and the mass restored.
pub fn spread_point_mass(grid: Grid, s: f64, mass: f64, t0: f64) -> Result<Field> {
    if !(mass > 0.0) {
        return Err(invalid("mass", format!("must be positive, got {mass}")));
    }
    let mut u = Field::zeros(grid);
    let c = grid.center_index();
    let idx = match grid.dim() {
        1 => c,
        _ => c * grid.points_per_axis() + c,
    };
    u.values[idx] = mass / grid.cell_volume();
    let spectral = crate::grid::Spectral::new(grid);
    let mut values = spectral.apply_multiplier(&u.values, |k2| (-k2.powf(s) * t0).exp());
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = values.iter().sum::<f64>() * grid.cell_volume();
    for v in values.iter_mut() {
        *v *= mass / total;
    }
    Field::new(grid, values, t0)
}

/// Default spreading time of the approximate delta: `max(10 dt, (2h)^{2s})`.
pub fn delta_spread_time(grid: &Grid, s: f64, dt: f64) -> f64 {
    (10.0 * dt).max((2.0 * grid.spacing()).powf(2.0 * s))
}

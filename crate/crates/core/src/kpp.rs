//! The reaction-diffusion problem `u_t + (-Delta)^s u^m = f(u)`, its
//! linearisation and the time change that maps it to the pure FPME.

use std::io::Write;

use serde::Serialize;

use crate::diffusion::{evolve, run_fpme, DiffusionStepper, ProfileConstants, SolutionTrace, Stage, StepperConfig};
use crate::error::{invalid, Error, Result};
use crate::front::level_radius;
use crate::grid::Field;
use crate::params::{critical_exponents, ModelParams, ReactionSpec};
use crate::tails::periodic_power_sum;

/// Order of the diffusion/reaction splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// Diffusion then reaction.
    #[default]
    Lie,
    /// Half reaction, diffusion, half reaction.
    Strang,
}

impl std::str::FromStr for Splitting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lie" => Ok(Splitting::Lie),
            "strang" => Ok(Splitting::Strang),
            other => Err(invalid("kpp.splitting", format!("expected lie or strang, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KppOptions {
    pub splitting: Splitting,
    /// Levels `lambda` in (0, 1) whose radii are recorded at every snapshot.
    pub level_targets: Vec<f64>,
}

impl Default for KppOptions {
    fn default() -> Self {
        Self {
            splitting: Splitting::Lie,
            level_targets: vec![0.5],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KppRun {
    pub params: ModelParams,
    #[serde(skip)]
    pub trace: SolutionTrace,
    pub level_targets: Vec<f64>,
    /// Snapshot times, aligned with the columns of `level_radii`.
    pub snapshot_times: Vec<f64>,
    /// `level_radii[j][k]` is `R_{lambda_j}` at snapshot `k`.
    pub level_radii: Vec<Vec<f64>>,
    /// Largest amount removed by the clamp `u <= 1` in a single step.
    pub max_overshoot: f64,
}

impl KppRun {
    pub fn radii(&self, lambda: f64) -> Option<&[f64]> {
        self.level_targets
            .iter()
            .position(|&l| l == lambda)
            .map(|j| self.level_radii[j].as_slice())
    }

    /// Snapshot rows `t, mass, max, min, R_lambda...` with a metadata header.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(String, String)]) -> Result<()> {
        writeln!(w, "# frackpp-kpp-trace v1")?;
        for (k, v) in meta {
            writeln!(w, "# {k} = {v}")?;
        }
        write!(w, "t,mass,max,min")?;
        for l in &self.level_targets {
            write!(w, ",R_{l}")?;
        }
        writeln!(w)?;
        for (k, u) in self.trace.snapshots.iter().enumerate() {
            write!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", u.time, u.mass(), u.max(), u.min())?;
            for radii in &self.level_radii {
                write!(w, ",{:.17e}", radii[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn require_reaction(p: &ModelParams) -> Result<&ReactionSpec> {
    p.reaction
        .as_ref()
        .ok_or_else(|| invalid("reaction", "the reaction-diffusion solver needs a reaction term"))
}

fn check_unit_interval(u: &Field) -> Result<()> {
    u.check_finite()?;
    if let Some(i) = u.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("u0", format!("value {} at index {i} lies outside [0, 1]", u.values[i])));
    }
    Ok(())
}

/// Advances `u' = f(u)` by `h` pointwise: the exact map for the logistic
/// family, Heun otherwise. The result is clamped to `[0, 1]`; the largest
/// amount removed above 1 is returned.
pub fn reaction_substep(f: &ReactionSpec, u: &mut [f64], h: f64) -> f64 {
    let mut over = 0.0_f64;
    match f.logistic_rate() {
        Some(a) => {
            let e = (a * h).exp_m1();
            for v in u.iter_mut() {
                let w = *v;
                *v = w * (1.0 + e) / (1.0 + w * e);
            }
        }
        None => {
            for v in u.iter_mut() {
                let k1 = f.evaluate(*v);
                let k2 = f.evaluate((*v + h * k1).clamp(0.0, 1.0));
                *v += 0.5 * h * (k1 + k2);
            }
        }
    }
    for v in u.iter_mut() {
        if *v > 1.0 {
            over = over.max(*v - 1.0);
            *v = 1.0;
        } else if *v < 0.0 {
            *v = 0.0;
        }
    }
    over
}

fn split_hook<'a>(
    splitting: Splitting,
    mut react: impl FnMut(&mut Vec<f64>, f64) -> Result<()> + 'a,
) -> impl FnMut(Stage, &mut Vec<f64>, f64) -> Result<()> + 'a {
    move |stage, u, h| match (splitting, stage) {
        (Splitting::Lie, Stage::Before) => Ok(()),
        (Splitting::Lie, Stage::After) => react(u, h),
        (Splitting::Strang, _) => react(u, 0.5 * h),
    }
}

/// One step of length `cfg.dt`. Unlike [`run_kpp`], trivial data are
/// accepted.
pub fn step_kpp(u: &Field, p: &ModelParams, cfg: &StepperConfig, splitting: Splitting) -> Result<Field> {
    let mut st = cfg.clone();
    st.t_end = u.time + cfg.dt;
    st.snapshot_times.clear();
    let run = evolve_kpp(
        u,
        p,
        &st,
        &KppOptions {
            splitting,
            level_targets: Vec::new(),
        },
    )?;
    Ok(run.trace.final_field().expect("final snapshot").clone())
}

/// Evolves `u0` to `cfg.t_end`, recording level radii at every snapshot.
pub fn run_kpp(u0: &Field, p: &ModelParams, cfg: &StepperConfig, opts: &KppOptions) -> Result<KppRun> {
    if u0.max() == 0.0 {
        return Err(invalid("u0", "initial data must be nontrivial"));
    }
    evolve_kpp(u0, p, cfg, opts)
}

fn evolve_kpp(u0: &Field, p: &ModelParams, cfg: &StepperConfig, opts: &KppOptions) -> Result<KppRun> {
    p.validate()?;
    let f = require_reaction(p)?.clone();
    if u0.grid.dim() != p.dim {
        return Err(invalid("grid.dim", "grid and model dimensions differ"));
    }
    check_unit_interval(u0)?;
    if let Some(l) = opts.level_targets.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::LevelOutOfRange { lambda: *l, range: "(0, 1)".into() });
    }
    let stepper = DiffusionStepper::new(u0.grid, p.s, p.m, cfg.clone())?;
    let mut max_overshoot = 0.0_f64;
    let trace = {
        let react = |u: &mut Vec<f64>, h: f64| {
            max_overshoot = max_overshoot.max(reaction_substep(&f, u, h));
            Ok(())
        };
        evolve(u0, stepper, cfg, split_hook(opts.splitting, react))?
    };
    let mut level_radii = vec![Vec::with_capacity(trace.snapshots.len()); opts.level_targets.len()];
    for u in &trace.snapshots {
        for (j, &l) in opts.level_targets.iter().enumerate() {
            level_radii[j].push(level_radius(u, l)?);
        }
    }
    Ok(KppRun {
        params: p.clone(),
        snapshot_times: trace.snapshots.iter().map(|u| u.time).collect(),
        trace,
        level_targets: opts.level_targets.clone(),
        level_radii,
        max_overshoot,
    })
}

/// Evolves the linearised problem `u_t + (-Delta)^s u^m = a u` (no clamp),
/// Strang-split with the exact growth factor.
pub fn run_linearized(u0: &Field, p: &ModelParams, a: f64, cfg: &StepperConfig) -> Result<SolutionTrace> {
    if !(a > 0.0) {
        return Err(invalid("fprime0", format!("growth rate must be positive, got {a}")));
    }
    if u0.values.iter().any(|v| *v < 0.0) {
        return Err(invalid("u0", "must be non-negative"));
    }
    let stepper = DiffusionStepper::new(u0.grid, p.s, p.m, cfg.clone())?;
    let grow = |u: &mut Vec<f64>, h: f64| {
        let g = (a * h).exp();
        u.iter_mut().for_each(|v| *v *= g);
        Ok(())
    };
    evolve(u0, stepper, cfg, split_hook(Splitting::Strang, grow))
}

/// `tau(t) = (e^{(m-1) a t} - 1) / ((m-1) a)`; equals `t` at `m = 1` and
/// is continuous across it.
pub fn tau_rescale(t: f64, m: f64, a: f64) -> f64 {
    let x = (m - 1.0) * a * t;
    if x.abs() < 1e-8 {
        t * (1.0 + 0.5 * x + x * x / 6.0)
    } else {
        t * x.exp_m1() / x
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub m: f64,
    pub fprime0: f64,
    /// Times `t` of the linearised run and the matching `tau(t)`.
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    /// `max |e^{-a t} u_lin(t) - v(tau(t))|` per time.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Evolves the linearised problem and the pure FPME independently and
/// compares `e^{-a t} u_lin(x, t)` with `v(x, tau(t))` at every time in
/// `times` (the last one is the horizon).
pub fn transform_consistency(u0: &Field, p: &ModelParams, cfg: &StepperConfig, times: &[f64]) -> Result<TransformReport> {
    let a = p.fprime0();
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] <= u0.time {
        return Err(invalid("times", "need increasing times after the initial time"));
    }
    let mut lin_cfg = cfg.clone();
    lin_cfg.t_end = *times.last().unwrap();
    lin_cfg.snapshot_times = times.to_vec();
    let taus: Vec<f64> = times.iter().map(|&t| tau_rescale(t - u0.time, p.m, a) + u0.time).collect();
    let mut fpme_cfg = cfg.clone();
    fpme_cfg.t_end = *taus.last().unwrap();
    fpme_cfg.snapshot_times = taus.clone();
    // same number of steps on both sides
    fpme_cfg.dt = cfg.dt * (fpme_cfg.t_end - u0.time) / (lin_cfg.t_end - u0.time);

    let (lin, fpme) = std::thread::scope(|scope| {
        let h = scope.spawn(|| run_linearized(u0, p, a, &lin_cfg));
        let fpme = run_fpme(u0, &ModelParams { reaction: None, ..p.clone() }, &fpme_cfg);
        (h.join().expect("linearised run panicked"), fpme)
    });
    let (lin, fpme) = (lin?, fpme?);
    let mut errors = Vec::with_capacity(times.len());
    for (&t, &tau) in times.iter().zip(&taus) {
        let ul = lin.snapshot_at(t).ok_or_else(|| invalid("times", format!("missing snapshot at {t}")))?;
        let v = fpme.snapshot_at(tau).ok_or_else(|| invalid("times", format!("missing snapshot at tau = {tau}")))?;
        let damp = (-a * (t - u0.time)).exp();
        let e = ul
            .values
            .iter()
            .zip(&v.values)
            .map(|(x, y)| (damp * x - y).abs())
            .fold(0.0, f64::max);
        errors.push(e);
    }
    Ok(TransformReport {
        m: p.m,
        fprime0: a,
        times: times.to_vec(),
        taus,
        max_error: errors.iter().copied().fold(0.0, f64::max),
        errors,
    })
}

/// `K1 e^{a t} (tau + tau0)^{2 beta s} |x|^{-(N+2s)}`, the upper bound for
/// data below `B_M(., tau0)`. `K1` is the unit-mass constant; the mass-`M`
/// profile has `K1 M^{1 + 2 beta s (m-1)}`.
pub fn linearized_supersolution_bound(
    x_norm: f64,
    t: f64,
    p: &ModelParams,
    mass: f64,
    tau0: f64,
    calibration: Option<&ProfileConstants>,
) -> Result<f64> {
    let k1 = calibration.ok_or(Error::MissingCalibration("K1 (Barenblatt profile tail constant)".into()))?.k1;
    bound_with(x_norm.powf(-(p.dim as f64 + 2.0 * p.s)), t, p, mass, tau0, k1)
}

fn bound_with(spatial: f64, t: f64, p: &ModelParams, mass: f64, tau0: f64, k1: f64) -> Result<f64> {
    let ex = critical_exponents(p)?;
    if p.m <= p.m1() {
        return Err(invalid("m", "the supersolution bound needs m > m_1"));
    }
    if !(mass > 0.0 && tau0 > 0.0) {
        return Err(invalid("tau0", "mass and tau0 must be positive"));
    }
    let a = p.fprime0();
    let tau = tau_rescale(t, p.m, a);
    let km = k1 * mass.powf(1.0 + 2.0 * ex.beta * p.s * (p.m - 1.0));
    Ok(km * (a * t).exp() * (tau + tau0).powf(2.0 * ex.beta * p.s) * spatial)
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionCheck {
    pub times: Vec<f64>,
    /// `min (bound - u)` over `r0 <= |x| <= L/2`, per snapshot.
    pub margins: Vec<f64>,
    /// Smallest `bound / u` over the same sets.
    pub min_ratio: f64,
    pub holds: bool,
}

/// Compares a completed run against the bound on `|x| >= r0`, using the
/// periodic image sum of `|x|^{-(N+2s)}` to match the periodic box.
pub fn check_supersolution_bound(
    run: &KppRun,
    mass: f64,
    tau0: f64,
    calibration: &ProfileConstants,
    r0: f64,
    slack: f64,
) -> Result<SupersolutionCheck> {
    let p = &run.params;
    let q = p.dim as f64 + 2.0 * p.s;
    let mut margins = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let t_start = run.trace.snapshots.first().map_or(0.0, |u| u.time);
    for u in &run.trace.snapshots {
        let half = u.grid.half_length();
        let (radii, values) = u.positive_axis();
        let mut margin = f64::INFINITY;
        for (&r, &v) in radii.iter().zip(&values) {
            if r < r0 || r > 0.5 * half {
                continue;
            }
            let spatial = periodic_power_sum(p.dim, r, half, q);
            let b = bound_with(spatial, u.time - t_start, p, mass, tau0, calibration.k1)?;
            margin = margin.min(b - v);
            if v > 0.0 {
                min_ratio = min_ratio.min(b / v);
            }
        }
        margins.push(margin);
    }
    Ok(SupersolutionCheck {
        times: run.snapshot_times.clone(),
        holds: margins.iter().all(|&m| m >= -slack),
        margins,
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::run_fpme;
    use crate::grid::Grid;
    use crate::heat_kernel::log_radii;
    use crate::initial::{gaussian, smooth_plateau};

    fn cfg(dt: f64, t_end: f64, snaps: &[f64]) -> StepperConfig {
        StepperConfig {
            dt,
            t_end,
            snapshot_times: snaps.to_vec(),
            ..Default::default()
        }
    }

    fn logistic(m: f64) -> ModelParams {
        ModelParams::new(1, 0.5, m).unwrap().with_logistic(1.0).unwrap()
    }

    #[test]
    fn tau_rescale_examples() {
        assert!((tau_rescale(2f64.ln(), 2.0, 1.0) - 1.0).abs() < 1e-14);
        assert_eq!(tau_rescale(0.7, 1.0, 1.0), 0.7);
        // continuity at m = 1 from both sides
        for m in [1.0 - 1e-9, 1.0 + 1e-9] {
            assert!((tau_rescale(0.7, m, 1.0) - 0.7).abs() < 1e-8);
        }
        // m < 1 saturates at 1 / ((1 - m) a)
        assert!((tau_rescale(200.0, 0.75, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data_follow_the_logistic_ode() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        for splitting in [Splitting::Lie, Splitting::Strang] {
            for m in [0.75, 1.0, 2.0] {
                let u0 = Field::from_radial(grid, |_| 0.3);
                let run = run_kpp(&u0, &logistic(m), &cfg(0.01, 2.0, &[]), &KppOptions { splitting, level_targets: vec![] }).unwrap();
                let u = run.trace.final_field().unwrap();
                let exact = 0.3 * 2f64.exp() / (1.0 - 0.3 + 0.3 * 2f64.exp());
                assert!(u.values.iter().all(|v| (v - exact).abs() < 1e-12), "m = {m}");
            }
        }
    }

    #[test]
    fn equilibria_are_fixed() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let p = logistic(2.0);
        let opts = KppOptions {
            level_targets: vec![],
            ..Default::default()
        };
        for c in [0.0, 1.0] {
            let mut u = Field::from_radial(grid, |_| c);
            for splitting in [Splitting::Lie, Splitting::Strang] {
                u = step_kpp(&u, &p, &cfg(0.01, 1.0, &[]), splitting).unwrap();
            }
            assert!(u.values.iter().all(|&v| v == c));
        }
        let zero = Field::from_radial(grid, |_| 0.0);
        assert!(run_kpp(&zero, &p, &cfg(0.01, 1.0, &[]), &opts).is_err());
        let one = Field::from_radial(grid, |_| 1.0);
        let run = run_kpp(&one, &p, &cfg(0.01, 1.0, &[]), &opts).unwrap();
        assert!(run.trace.final_field().unwrap().values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invariant_region_and_growth_from_a_subsolution() {
        let grid = Grid::new(1, 1024, 100.0).unwrap();
        let u0 = smooth_plateau(grid, 0.5, 2.0, 4.0).unwrap();
        let times: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
        for m in [0.75, 1.0, 2.0] {
            let run = run_kpp(&u0, &logistic(m), &cfg(0.01, 5.0, &times), &KppOptions::default()).unwrap();
            for u in &run.trace.snapshots {
                assert!(u.min() >= 0.0 && u.max() <= 1.0 + 1e-10);
            }
            assert!(run.max_overshoot <= 1e-10);
            // the level-1/2 set only grows
            let r = run.radii(0.5).unwrap();
            assert!(r.windows(2).all(|w| w[1] >= w[0]), "m = {m}: {r:?}");
        }
    }

    #[test]
    fn kpp_dominates_pure_diffusion() {
        let grid = Grid::new(1, 512, 50.0).unwrap();
        let u0 = gaussian(grid, 0.8, 2.0).unwrap();
        let c = cfg(0.01, 3.0, &[1.0, 2.0]);
        for m in [0.75, 2.0] {
            let p = logistic(m);
            let kpp = run_kpp(&u0, &p, &c, &KppOptions::default()).unwrap();
            let fpme = run_fpme(&u0, &ModelParams { reaction: None, ..p.clone() }, &c).unwrap();
            for (a, b) in kpp.trace.snapshots.iter().zip(&fpme.snapshots) {
                let worst = b.values.iter().zip(&a.values).map(|(x, y)| x - y).fold(f64::MIN, f64::max);
                assert!(worst <= 1e-8, "m = {m}, t = {}: {worst}", a.time);
            }
        }
    }

    #[test]
    fn rejects_data_outside_the_unit_interval() {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let u0 = Field::from_radial(grid, |_| 1.5);
        assert!(run_kpp(&u0, &logistic(1.0), &cfg(0.01, 0.1, &[]), &KppOptions::default()).is_err());
    }

    #[test]
    fn custom_reaction_substep_stays_in_range() {
        let f = ReactionSpec::damped_logistic(1.0).unwrap();
        let mut u: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let over = reaction_substep(&f, &mut u, 0.5);
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(over <= 1e-10);
    }

    #[test]
    fn linear_supersolution_bound_holds() {
        let p = logistic(1.0);
        let mut radii = vec![0.0];
        radii.extend(log_radii(1e-2, 1e4, 200));
        let calib = ProfileConstants::from_kernel(0.5, 1, &radii).unwrap();
        let grid = Grid::new(1, 2048, 200.0).unwrap();
        // 0.1 e^{-x^2} <= P(x, 1) = 1 / (pi (1 + x^2))
        let u0 = gaussian(grid, 0.1, 1.0).unwrap();
        let run = run_kpp(&u0, &p, &cfg(0.01, 4.0, &[1.0, 2.0, 3.0, 4.0]), &KppOptions::default()).unwrap();
        let check = check_supersolution_bound(&run, 1.0, 1.0, &calib, 2.0, 0.0).unwrap();
        assert!(check.holds, "{check:?}");
        assert!(matches!(
            linearized_supersolution_bound(3.0, 1.0, &p, 1.0, 1.0, None),
            Err(Error::MissingCalibration(_))
        ));
    }

    #[test]
    fn transform_identity_at_m_one_is_exact() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let u0 = gaussian(grid, 0.5, 1.0).unwrap();
        let rep = transform_consistency(&u0, &logistic(1.0), &cfg(1e-2, 1.0, &[]), &[0.5, 1.0]).unwrap();
        assert!(rep.max_error < 1e-12, "{rep:?}");
        assert_eq!(rep.taus, vec![0.5, 1.0]);
    }
}

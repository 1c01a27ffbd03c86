//! Barenblatt extraction: evolve an approximate point mass and rescale.

use serde::Serialize;

use super::{delta_spread_time, run_fpme, spread_point_mass, SolutionTrace, StepperConfig};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::heat_kernel::{RadialProfile, TailLaw};
use crate::params::{classify_regime, critical_exponents, ModelParams, Regime};
use crate::tails::{periodized_tail_fit, periodized_tail_fit_corrected};

#[derive(Debug, Clone, Serialize)]
pub struct BarenblattConfig {
    pub grid: Grid,
    pub stepper: StepperConfig,
    /// Snapshot times as fractions of `stepper.t_end`, increasing, last = 1.
    pub snapshot_fractions: Vec<f64>,
    /// Collapse tolerance between the last two rescaled snapshots.
    pub tolerance: f64,
    /// Tail window as fractions of the half-length `L`.
    pub tail_window: [f64; 2],
    /// Collapse is measured on `|x| <= collapse_extent * L` of the later
    /// snapshot, away from the periodic images.
    pub collapse_extent: f64,
    /// Spreading time of the initial point mass; defaults to
    /// [`delta_spread_time`].
    pub spread_time: Option<f64>,
}

impl BarenblattConfig {
    pub fn new(grid: Grid, stepper: StepperConfig) -> Self {
        Self {
            grid,
            stepper,
            snapshot_fractions: vec![0.25, 0.5, 1.0],
            tolerance: 0.02,
            tail_window: [0.1, 0.9],
            collapse_extent: 0.5,
            spread_time: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let f = &self.snapshot_fractions;
        if f.len() < 2 || f.windows(2).any(|w| !(w[1] > w[0])) || f[0] <= 0.0 || *f.last().unwrap() != 1.0 {
            return Err(invalid(
                "barenblatt.snapshot_fractions",
                "need at least two increasing fractions in (0, 1] ending at 1",
            ));
        }
        let [lo, hi] = self.tail_window;
        if !(0.0 < lo && lo < hi && hi <= 0.9) {
            return Err(invalid(
                "barenblatt.tail_window",
                format!("need 0 < lo < hi <= 0.9 (fractions of L), got [{lo}, {hi}]"),
            ));
        }
        if !(self.collapse_extent > 0.0 && self.collapse_extent <= 0.9) {
            return Err(invalid("barenblatt.collapse_extent", "must lie in (0, 0.9]"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("barenblatt.tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// How the tail was fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailModel {
    /// `C sum_k |x + 2kL|^{-p}`
    Periodized,
    /// Periodized leading term plus a subleading term with relative decay
    /// `|x|^{-q}`.
    PeriodizedCorrected { q: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct BarenblattRun {
    pub mass: f64,
    pub alpha: f64,
    pub beta: f64,
    pub regime: Regime,
    pub spread_time: f64,
    /// `(eta, F)` from the final snapshot, `|x| <= 0.9 L`.
    #[serde(skip)]
    pub profile: RadialProfile,
    #[serde(skip)]
    pub snapshots: Vec<Field>,
    /// `(t_a, t_b, discrepancy)` for consecutive snapshots.
    pub discrepancies: Vec<(f64, f64, f64)>,
    /// Collapse residual of the last pair.
    pub discrepancy: f64,
    pub converged: bool,
    pub tail: TailLaw,
    pub tail_time: f64,
    pub tail_model: TailModel,
    pub expected_tail_exponent: f64,
    #[serde(skip)]
    pub trace: SolutionTrace,
}

/// Tail exponent of the Barenblatt profile: `-(N+2s)` above `m_1`,
/// `-2s/(1-m)` below.
pub fn expected_tail_exponent(p: &ModelParams) -> Result<f64> {
    let n = p.dim as f64;
    Ok(match classify_regime(p)? {
        Regime::R1 => -2.0 * p.s / (1.0 - p.m),
        _ => -(n + 2.0 * p.s),
    })
}

/// Relative decay of the first correction to the `|x|^{-(N+2s)}` tail:
/// `(m-1)(N+2s) + 2s`, positive for `m > m_1`.
pub fn tail_correction_exponent(p: &ModelParams) -> f64 {
    (p.m - 1.0) * (p.dim as f64 + 2.0 * p.s) + 2.0 * p.s
}

/// `F(eta) = t^alpha u(eta t^beta, t)` along the positive axis for
/// `|x| <= 0.9 L`.
pub fn rescale(u: &Field, alpha: f64, beta: f64) -> Result<RadialProfile> {
    let (radii, values) = u.positive_axis();
    let cut = 0.9 * u.grid.half_length();
    let t = u.time;
    let (eta, f): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&values)
        .filter(|(&r, _)| r <= cut)
        .map(|(&r, &v)| (r / t.powf(beta), t.powf(alpha) * v))
        .unzip();
    Ok(RadialProfile::new(eta, f, u.grid.dim())?
        .with_meta("t", t)
        .with_meta("alpha", alpha)
        .with_meta("beta", beta))
}

/// `max |F_a - F_b| / max F_b` over `|x| <= extent * L` of the later
/// snapshot `b`.
pub fn collapse_discrepancy(a: &Field, b: &Field, alpha: f64, beta: f64, extent: f64) -> f64 {
    let (radii, values) = b.positive_axis();
    let cut = extent * b.grid.half_length();
    let mut worst = 0.0_f64;
    let mut peak = 0.0_f64;
    for (&r, &v) in radii.iter().zip(&values) {
        if r > cut {
            break;
        }
        let eta = r / b.time.powf(beta);
        let xa = eta * a.time.powf(beta);
        if xa > cut {
            break;
        }
        let fb = b.time.powf(alpha) * v;
        let fa = a.time.powf(alpha) * a.interpolate([xa, 0.0]);
        worst = worst.max((fa - fb).abs());
        peak = peak.max(fb.abs());
    }
    if peak == 0.0 {
        f64::INFINITY
    } else {
        worst / peak
    }
}

/// Evolves a spread point mass of mass `M` and measures collapse and tail,
/// without requiring convergence.
pub fn barenblatt_run(mass: f64, p: &ModelParams, cfg: &BarenblattConfig) -> Result<BarenblattRun> {
    cfg.validate()?;
    let ex = critical_exponents(p)?;
    let regime = classify_regime(p)?;
    if cfg.grid.dim() != p.dim {
        return Err(invalid("grid.dim", "grid and model dimensions differ"));
    }
    let t_end = cfg.stepper.t_end;
    let t0 = cfg
        .spread_time
        .unwrap_or_else(|| delta_spread_time(&cfg.grid, p.s, cfg.stepper.dt));
    let first = cfg.snapshot_fractions[0] * t_end;
    if t0 >= first {
        return Err(invalid(
            "barenblatt.spread_time",
            format!("spreading time {t0} must precede the first snapshot {first}"),
        ));
    }
    let u0 = spread_point_mass(cfg.grid, p.s, mass, t0)?;
    let mut stepper = cfg.stepper.clone();
    stepper.snapshot_times = cfg.snapshot_fractions.iter().map(|f| f * t_end).collect();
    let trace = run_fpme(&u0, p, &stepper)?;
    let snapshots: Vec<Field> = trace.snapshots.clone();

    let discrepancies: Vec<(f64, f64, f64)> = snapshots
        .windows(2)
        .map(|w| (w[0].time, w[1].time, collapse_discrepancy(&w[0], &w[1], ex.alpha, ex.beta, cfg.collapse_extent)))
        .collect();
    let discrepancy = discrepancies.last().map_or(f64::INFINITY, |d| d.2);

    let half = cfg.grid.half_length();
    let (lo, hi) = (cfg.tail_window[0] * half, cfg.tail_window[1] * half);
    let tail_field = &snapshots[0];
    let (tail, tail_model) = match regime {
        Regime::R1 => (periodized_tail_fit(tail_field, lo, hi)?, TailModel::Periodized),
        _ => {
            let q = tail_correction_exponent(p);
            (
                periodized_tail_fit_corrected(tail_field, lo, hi, q)?,
                TailModel::PeriodizedCorrected { q },
            )
        }
    };
    let expected = expected_tail_exponent(p)?;
    let tail = TailLaw {
        expected_exponent: expected,
        ..tail
    };
    let last = snapshots.last().expect("final snapshot is always recorded");
    let profile = rescale(last, ex.alpha, ex.beta)?.with_meta("m", p.m).with_meta("s", p.s);
    Ok(BarenblattRun {
        mass,
        alpha: ex.alpha,
        beta: ex.beta,
        regime,
        spread_time: t0,
        profile,
        converged: discrepancy <= cfg.tolerance,
        discrepancies,
        discrepancy,
        tail,
        tail_time: tail_field.time,
        tail_model,
        expected_tail_exponent: expected,
        snapshots,
        trace,
    })
}

/// [`barenblatt_run`] that fails unless the last two rescaled snapshots
/// agree within the configured tolerance.
pub fn barenblatt_profile(mass: f64, p: &ModelParams, cfg: &BarenblattConfig) -> Result<BarenblattRun> {
    let run = barenblatt_run(mass, p, cfg)?;
    if !run.converged {
        return Err(Error::NonConvergence {
            t_end: cfg.stepper.t_end,
            discrepancy: run.discrepancy,
        });
    }
    Ok(run)
}

/// Profile data of the unit-mass Barenblatt profile `F_1`:
/// `K2 (1 + r^{N+2s})^{-1} <= F_1(r) <= K1 r^{-(N+2s)}` and `F_1(0)`.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileConstants {
    pub f0: f64,
    pub k1: f64,
    pub k2: f64,
    /// Limit of `F_1(r) r^{N+2s}`.
    pub tail_constant: f64,
    /// Sampled `F_1`; beyond the last radius the tail law is used.
    #[serde(skip)]
    pub profile: RadialProfile,
}

impl ProfileConstants {
    /// Extracts the constants from a run with `m > m_1`, converting to unit
    /// mass with `F_1(r) = M^{(m-1)alpha - 1} F_M(r M^{(m-1)beta})`.
    /// Samples beyond `extent * L` at the final time are ignored.
    pub fn from_run(run: &BarenblattRun, p: &ModelParams, extent: f64) -> Result<Self> {
        if run.regime == Regime::R1 {
            return Err(invalid("m", "profile constants need m > m_1 (power tail -(N+2s))"));
        }
        let q = p.dim as f64 + 2.0 * p.s;
        let last = run.snapshots.last().expect("final snapshot is always recorded");
        let t = last.time;
        let cut = extent * last.grid.half_length() / t.powf(run.beta);
        let value_scale = run.mass.powf((p.m - 1.0) * run.alpha - 1.0);
        let radius_scale = run.mass.powf(-(p.m - 1.0) * run.beta);
        let (radii, values): (Vec<f64>, Vec<f64>) = run
            .profile
            .radii
            .iter()
            .zip(&run.profile.values)
            .filter(|(&r, _)| r <= cut)
            .map(|(&r, &v)| (r * radius_scale, v * value_scale))
            .unzip();
        // tail fit of u at tail_time: u ~ C |x|^{-q}, F_M tail constant C t^{-2 beta s}
        let tail_m = run.tail.constant * run.tail_time.powf(-2.0 * run.beta * p.s);
        let tail_constant = tail_m * value_scale * radius_scale.powf(q);
        let profile = RadialProfile::new(radii, values, p.dim)?
            .with_meta("m", p.m)
            .with_meta("s", p.s);
        Self::from_profile(profile, tail_constant, q)
    }

    /// Constants of the linear kernel (`m = 1`), sampled on `radii`.
    pub fn from_kernel(s: f64, dim: usize, radii: &[f64]) -> Result<Self> {
        let profile = crate::heat_kernel::kernel_profile(s, dim, radii)?;
        let c1 = crate::heat_kernel::asymptotic_constant(dim, s)?;
        Self::from_profile(profile, c1, dim as f64 + 2.0 * s)
    }

    fn from_profile(profile: RadialProfile, tail_constant: f64, q: f64) -> Result<Self> {
        if profile.radii.first() != Some(&0.0) {
            return Err(invalid("profile", "must be sampled at r = 0"));
        }
        if !profile.is_positive() || !(tail_constant > 0.0) {
            return Err(Error::InsufficientSamples("profile or tail constant not positive".into()));
        }
        let mut k1 = tail_constant;
        let mut k2 = tail_constant;
        for (&r, &v) in profile.radii.iter().zip(&profile.values) {
            k1 = k1.max(v * r.powf(q));
            k2 = k2.min(v * (1.0 + r.powf(q)));
        }
        Ok(Self {
            f0: profile.values[0],
            k1,
            k2,
            tail_constant,
            profile,
        })
    }

    /// `F_1(r)`, interpolated inside the sampled range and extended by the
    /// tail law beyond it.
    pub fn evaluate(&self, r: f64) -> f64 {
        let last = *self.profile.radii.last().unwrap();
        if r <= last {
            self.profile.interpolate(r)
        } else {
            let q = self.profile.dim as f64 + 2.0 * self.profile.meta.get("s").copied().unwrap_or(0.5);
            let v_last = *self.profile.values.last().unwrap();
            // continuous hand-over to the asymptotic law
            v_last * (r / last).powf(-q)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MassScalingReport {
    pub mass: f64,
    pub time: f64,
    pub scaled_time: f64,
    /// Largest `|B_M - M B_1(., M^{m-1} t)| / max B_M`.
    pub max_violation: f64,
    pub violation_at: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `B_M(x, t)` with `M B_1(x, M^{m-1} t)` on the grid, both
/// evolved from spread point masses; `t = cfg.stepper.t_end`.
pub fn verify_mass_scaling(mass: f64, p: &ModelParams, cfg: &BarenblattConfig) -> Result<MassScalingReport> {
    cfg.validate()?;
    if !(mass > 0.0) {
        return Err(invalid("mass", format!("must be positive, got {mass}")));
    }
    let t = cfg.stepper.t_end;
    let scaled = mass.powf(p.m - 1.0) * t;
    let t0 = cfg
        .spread_time
        .unwrap_or_else(|| delta_spread_time(&cfg.grid, p.s, cfg.stepper.dt));
    let run_to = |m_total: f64, t_end: f64| -> Result<Field> {
        let u0 = spread_point_mass(cfg.grid, p.s, m_total, t0)?;
        let mut st = cfg.stepper.clone();
        st.t_end = t_end;
        st.snapshot_times.clear();
        let trace = run_fpme(&u0, p, &st)?;
        Ok(trace.final_field().expect("final snapshot").clone())
    };
    let (big, unit) = std::thread::scope(|scope| {
        let h = scope.spawn(|| run_to(mass, t));
        let unit = run_to(1.0, scaled);
        (h.join().expect("mass-M run panicked"), unit)
    });
    let (big, unit) = (big?, unit?);
    let peak = big.max();
    let cut = 0.9 * cfg.grid.half_length();
    let mut worst = 0.0_f64;
    let mut at = 0.0;
    for i in 0..cfg.grid.len() {
        let r = cfg.grid.radius(i);
        if r > cut {
            continue;
        }
        let d = (big.values[i] - mass * unit.values[i]).abs() / peak;
        if d > worst {
            worst = d;
            at = r;
        }
    }
    Ok(MassScalingReport {
        mass,
        time: t,
        scaled_time: scaled,
        max_violation: worst,
        violation_at: at,
        tolerance: 0.03,
        passed: worst <= 0.03,
    })
}

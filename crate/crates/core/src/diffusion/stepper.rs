use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, Spectral};

/// Time integrator for the diffusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// ARS(2,2,2): `mu (-Delta)^s u` implicit, the remainder explicit.
    Imex,
    /// Heun's method (explicit second-order Runge-Kutta).
    Explicit,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex" => Ok(Scheme::Imex),
            "explicit" => Ok(Scheme::Explicit),
            other => Err(invalid("stepper.scheme", format!("expected imex or explicit, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Step size; an upper bound when `cfl` is set or the scheme is explicit.
    pub dt: f64,
    pub t_end: f64,
    /// Lower cut-off for `u` in the stiffness coefficient `m u^{m-1}`.
    pub positivity_floor: f64,
    pub snapshot_times: Vec<f64>,
    /// For `m = 1`, advance by the exact exponential `exp(-|xi|^{2s} dt)`.
    pub exact_linear: bool,
    /// When set, `dt` is capped so that `dt * a_max * lambda_max <= cfl`,
    /// with `a_max = max m max(u, floor)^{m-1}` and `lambda_max` the
    /// largest symbol value. The explicit scheme always uses
    /// [`EXPLICIT_CFL`] unless a smaller value is given.
    pub cfl: Option<f64>,
    /// A step that multiplies `max u` by more than this aborts the run.
    pub max_growth: f64,
}

/// Safety factor of the explicit scheme (Heun is stable up to 2).
pub const EXPLICIT_CFL: f64 = 1.0;
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-14;

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Imex,
            dt: 1e-3,
            t_end: 1.0,
            positivity_floor: DEFAULT_POSITIVITY_FLOOR,
            snapshot_times: Vec::new(),
            exact_linear: true,
            cfl: None,
            max_growth: 10.0,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("stepper.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("stepper.t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.positivity_floor >= 0.0) {
            return Err(invalid("stepper.positivity_floor", "must be non-negative"));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0) {
                return Err(invalid("stepper.cfl", format!("must be positive, got {c}")));
            }
        }
        if !(self.max_growth > 1.0) {
            return Err(invalid("stepper.max_growth", "must exceed 1"));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("stepper.snapshot_times", "must be finite and non-negative"));
        }
        Ok(())
    }

    fn effective_cfl(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Explicit => Some(self.cfl.map_or(EXPLICIT_CFL, |c| c.min(EXPLICIT_CFL))),
            Scheme::Imex => self.cfl,
        }
    }
}

/// Advances `u_t + (-Delta)^s u^m = 0` on a fixed grid. Owns the FFT plans
/// and the symbol; one instance per run.
#[derive(Debug, Clone)]
pub struct DiffusionStepper {
    spectral: Spectral,
    symbol: Vec<f64>,
    lambda_max: f64,
    m: f64,
    s: f64,
    cfg: StepperConfig,
    /// Mass added by clipping negative values, accumulated over all steps.
    pub clipped_mass: f64,
    pub steps: usize,
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

impl DiffusionStepper {
    pub fn new(grid: Grid, s: f64, m: f64, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(invalid("m", format!("must be positive, got {m}")));
        }
        let spectral = Spectral::new(grid);
        let symbol = spectral.symbol(s);
        let lambda_max = symbol.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            spectral,
            symbol,
            lambda_max,
            m,
            s,
            cfg,
            clipped_mass: 0.0,
            steps: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn is_linear(&self) -> bool {
        self.m == 1.0
    }

    /// `max_x m max(u, floor)^{m-1}`.
    pub fn stiffness(&self, u: &[f64]) -> f64 {
        if self.is_linear() {
            return 1.0;
        }
        let floor = self.cfg.positivity_floor;
        let pick = if self.m > 1.0 {
            u.iter().copied().fold(0.0, f64::max)
        } else {
            u.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let base = pick.max(floor);
        if base == 0.0 {
            return if self.m > 1.0 { 0.0 } else { f64::INFINITY };
        }
        self.m * base.powf(self.m - 1.0)
    }

    /// The step actually taken from state `u` when at most `dt` is wanted.
    pub fn admissible_dt(&self, u: &[f64], dt: f64) -> f64 {
        if self.is_linear() && self.cfg.scheme == Scheme::Imex {
            return dt;
        }
        match self.cfg.effective_cfl() {
            Some(c) => {
                let a = self.stiffness(u);
                if a * self.lambda_max == 0.0 {
                    dt
                } else {
                    dt.min(c / (a * self.lambda_max))
                }
            }
            None => dt,
        }
    }

    fn power(&self, u: &[f64]) -> Vec<f64> {
        if self.is_linear() {
            return u.to_vec();
        }
        u.iter().map(|&v| v.signum() * v.abs().powf(self.m)).collect()
    }

    /// One step of length exactly `dt` (no adaptive capping). Negative
    /// values are clipped to zero afterwards and the added mass recorded.
    pub fn step_exact(&mut self, u: &mut Vec<f64>, dt: f64) -> Result<()> {
        let before = u.iter().copied().fold(0.0, f64::max);
        let next = match (self.cfg.scheme, self.is_linear() && self.cfg.exact_linear) {
            (_, true) => self.spectral.apply_multiplier(u, |k2| (-k2.powf(self.s) * dt).exp()),
            (Scheme::Imex, false) => self.imex(u, dt),
            (Scheme::Explicit, false) => self.heun(u, dt),
        };
        *u = next;
        let cell = self.grid().cell_volume();
        for v in u.iter_mut() {
            if *v < 0.0 {
                self.clipped_mass -= *v * cell;
                *v = 0.0;
            }
        }
        self.steps += 1;
        if let Some(index) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let after = u.iter().copied().fold(0.0, f64::max);
        if before > 0.0 && after > self.cfg.max_growth * before {
            return Err(Error::Instability {
                step: self.steps,
                time: f64::NAN,
                growth: after / before,
            });
        }
        Ok(())
    }

    /// One step of at most `dt`; returns the step length used.
    pub fn step(&mut self, u: &mut Vec<f64>, dt: f64) -> Result<f64> {
        let h = self.admissible_dt(u, dt);
        self.step_exact(u, h)?;
        Ok(h)
    }

    /// `-|xi|^{2s} (hat(u^m) - mu hat(u))`
    fn explicit_part(&self, u: &[f64], u_hat: &[Complex64], mu: f64) -> Vec<Complex64> {
        let pw = self.spectral.forward(&self.power(u));
        pw.iter()
            .zip(u_hat)
            .zip(&self.symbol)
            .map(|((&a, &b), &k)| -(a - b * mu) * k)
            .collect()
    }

    fn imex(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let mu = if self.is_linear() { 1.0 } else { self.stiffness(u) };
        let delta = 1.0 - 1.0 / (2.0 * GAMMA);
        let u_hat = self.spectral.forward(u);
        let e0 = self.explicit_part(u, &u_hat, mu);
        let stage: Vec<Complex64> = u_hat
            .iter()
            .zip(&e0)
            .zip(&self.symbol)
            .map(|((&v, &e), &k)| (v + e * (GAMMA * dt)) / (1.0 + GAMMA * dt * mu * k))
            .collect();
        let u1 = self.spectral.inverse(stage.clone());
        let e1 = self.explicit_part(&u1, &stage, mu);
        let next: Vec<Complex64> = u_hat
            .iter()
            .zip(&e0)
            .zip(&e1)
            .zip(&stage)
            .zip(&self.symbol)
            .map(|((((&v, &a), &b), &g), &k)| {
                let rhs = v + (a * delta + b * (1.0 - delta)) * dt - g * ((1.0 - GAMMA) * dt * mu * k);
                rhs / (1.0 + GAMMA * dt * mu * k)
            })
            .collect();
        self.spectral.inverse(next)
    }

    fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let pw = self.power(u);
        self.spectral
            .apply_multiplier(&pw, |k2| if k2 == 0.0 { 0.0 } else { -k2.powf(self.s) })
    }

    fn heun(&self, u: &[f64], dt: f64) -> Vec<f64> {
        let k1 = self.rhs(u);
        let mid: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + dt * b).collect();
        let k2 = self.rhs(&mid);
        u.iter()
            .zip(k1.iter().zip(&k2))
            .map(|(a, (b, c))| a + 0.5 * dt * (b + c))
            .collect()
    }

    /// The rational multiplier the IMEX scheme applies to a mode with
    /// `z = |xi|^{2s} dt` when `m = 1`.
    pub fn imex_linear_factor(z: f64) -> f64 {
        (1.0 + (2.0 * GAMMA - 1.0) * z) / (1.0 + GAMMA * z).powi(2)
    }
}

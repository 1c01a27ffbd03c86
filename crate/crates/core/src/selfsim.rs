//! Self-similar solutions `U(x, t) = t^{gamma/2s} F(|x| t^{-1/2s})` of the
//! linear fractional heat equation with data `|x|^gamma`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::diffusion::{run_fpme, StepperConfig};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::heat_kernel::quadrature::{integrate, integrate_graded};
use crate::heat_kernel::{asymptotic_constant, kernel_profile, least_squares, RadialProfile};
use crate::initial::smooth_step;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimExponents {
    /// `gamma / 2s`
    pub alpha1: f64,
    /// `-1 / 2s`
    pub beta1: f64,
    pub gamma: f64,
}

impl SelfSimExponents {
    pub fn new(gamma: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
        }
        if !(gamma > 0.0 && gamma < 2.0 * s) {
            return Err(invalid("gamma", format!("need 0 < gamma < 2s = {}, got {gamma}", 2.0 * s)));
        }
        Ok(Self {
            alpha1: gamma / (2.0 * s),
            beta1: -1.0 / (2.0 * s),
            gamma,
        })
    }
}

const TABLE_POINTS: usize = 1500;
const TABLE_LO: f64 = 1e-6;
const TABLE_HI: f64 = 1e5;
const DOUBLINGS: usize = 80;

/// `f(r)` tabulated on a uniform grid in `ln r`, cubic in log-log, with
/// the asymptotic law `C_1 r^{-(N+2s)}` beyond the table.
struct KernelTable {
    f0: f64,
    ln_lo: f64,
    step: f64,
    ln_values: Vec<f64>,
    c1: f64,
    q: f64,
}

impl KernelTable {
    fn new(s: f64, dim: usize) -> Result<Self> {
        let (ln_lo, ln_hi) = (TABLE_LO.ln(), TABLE_HI.ln());
        let step = (ln_hi - ln_lo) / (TABLE_POINTS - 1) as f64;
        let mut radii = vec![0.0];
        radii.extend((0..TABLE_POINTS).map(|i| (ln_lo + i as f64 * step).exp()));
        let prof = kernel_profile(s, dim, &radii)?;
        Ok(Self {
            f0: prof.values[0],
            ln_lo,
            step,
            ln_values: prof.values[1..].iter().map(|v| v.ln()).collect(),
            c1: asymptotic_constant(dim, s)?,
            q: dim as f64 + 2.0 * s,
        })
    }

    fn eval(&self, r: f64) -> f64 {
        if r <= TABLE_LO {
            return self.f0;
        }
        if r >= TABLE_HI {
            return self.c1 * r.powf(-self.q);
        }
        let x = (r.ln() - self.ln_lo) / self.step;
        let n = self.ln_values.len();
        let i = (x.floor() as usize).clamp(1, n - 3);
        let t = x - i as f64;
        let y = &self.ln_values[i - 1..i + 3];
        // four-point Lagrange on nodes -1, 0, 1, 2
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        (l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]).exp()
    }
}

/// Integral over `[a, b]` graded towards both ends.
fn graded_both(a: f64, b: f64, levels_a: usize, levels_b: usize, f: &impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    integrate_graded(a, mid, levels_a, f) - integrate_graded(b, mid, levels_b, f)
}

fn levels_for(width: f64) -> usize {
    (width.max(1.0).log2().ceil() as usize) + 6
}

/// `int_0^inf g(r) r^{gamma + N - 1} dr` split at `0`, `eta` and then in
/// doublings, with the far tail `g ~ c r^{-q}` added analytically.
fn radial_integral(eta: f64, gamma: f64, q_eff: f64, tail_coeff: f64, g: impl Fn(f64) -> f64) -> f64 {
    let w = |z: f64| g(z) * z.powf(gamma);
    let mut total = 0.0;
    if eta > 0.0 {
        total += graded_both(0.0, eta, 40, levels_for(eta), &w);
    }
    let span = eta.max(8.0);
    total += integrate_graded(eta, eta + span, if eta > 0.0 { levels_for(span) } else { 40 }, &w);
    let mut lo = eta + span;
    for _ in 0..DOUBLINGS {
        let hi = 2.0 * lo;
        total += integrate(lo, 0.5 * (lo + hi), &w) + integrate(0.5 * (lo + hi), hi, &w);
        lo = hi;
    }
    let e = gamma - q_eff + 1.0;
    total + tail_coeff * lo.powf(e) / -e
}

/// `F(eta) = int f(eta - z) |z|^gamma dz` with `f` the kernel profile at
/// unit time, for each `eta`.
pub fn selfsim_profile(gamma: f64, s: f64, dim: usize, etas: &[f64]) -> Result<RadialProfile> {
    SelfSimExponents::new(gamma, s)?;
    if !(dim == 1 || dim == 2) {
        return Err(invalid("dim", "self-similar profiles are implemented for N = 1, 2"));
    }
    if etas.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(invalid("etas", "must be finite and non-negative"));
    }
    let k = KernelTable::new(s, dim)?;
    let q = dim as f64 + 2.0 * s;
    let values: Vec<f64> = etas
        .par_iter()
        .map(|&eta| match dim {
            1 => radial_integral(eta, gamma, q, 2.0 * k.c1, |z| k.eval((eta - z).abs()) + k.eval(eta + z)),
            _ => {
                let angular = |rho: f64| {
                    let lv = levels_for(PI * eta.max(1.0).min(rho.max(1.0)));
                    let g = |th: f64| k.eval((eta * eta + rho * rho - 2.0 * eta * rho * th.cos()).max(0.0).sqrt());
                    2.0 * integrate_graded(0.0, PI, lv, g)
                };
                radial_integral(eta, gamma + 1.0, q, 2.0 * PI * k.c1, |rho| angular(rho))
            }
        })
        .collect();
    Ok(RadialProfile::new(etas.to_vec(), values, dim)?
        .with_meta("gamma", gamma)
        .with_meta("s", s))
}

/// `0` followed by `n` log-spaced points in `[lo, hi]`.
pub fn profile_etas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(crate::heat_kernel::log_radii(lo, hi, n));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub gamma: f64,
    /// `[eta_lo, eta_hi]`, the last sampled decade.
    pub window: [f64; 2],
    /// Largest `|gamma F - eta F'| / eta^gamma` over the window.
    pub deriv_bound: f64,
    /// Largest difference between the centred and one-sided derivative
    /// estimates, relative to `eta^gamma`.
    pub differencing_error: f64,
    /// `min` and `max` of `F / eta^gamma` over the window.
    pub tail_ratio_range: [f64; 2],
    /// `(max - min) / mean` of `F / eta^gamma` over the window.
    pub tail_flatness: f64,
    /// Samples where `F` decreases by more than `monotone_tolerance * F`.
    pub monotone_violations: usize,
    pub monotone_tolerance: f64,
    /// Sign of `gamma F - eta F'` (and so of `U_t`) at each sample.
    pub positive_samples: usize,
    pub negative_samples: usize,
    /// Per-sample `F/eta^gamma` and `|gamma F - eta F'| / eta^gamma`.
    pub tail_ratio: Vec<f64>,
    pub deriv_ratio: Vec<f64>,
}

/// Relative tolerance for profile monotonicity (quadrature accuracy).
pub const MONOTONE_TOL: f64 = 1e-7;

/// Differentiates a profile on its (non-uniform) samples and measures the
/// tail quantities over the last decade.
pub fn profile_derivative_bound(p: &RadialProfile, gamma: f64) -> Result<ProfileReport> {
    let (r, f) = (&p.radii, &p.values);
    let n = r.len();
    if n < 5 {
        return Err(Error::InsufficientSamples("need at least five profile samples".into()));
    }
    let hi = r[n - 1];
    let lo = hi / 10.0;
    if r[0] > lo || !(lo > 0.0) {
        return Err(Error::InsufficientSamples("profile must span a full decade".into()));
    }
    let mut deriv = vec![f64::NAN; n];
    let mut noise = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        let d = (h0 * h0 * (f[i + 1] - f[i]) + h1 * h1 * (f[i] - f[i - 1])) / (h0 * h1 * (h0 + h1));
        let back = (f[i] - f[i - 1]) / h0;
        let fwd = (f[i + 1] - f[i]) / h1;
        deriv[i] = d;
        noise[i] = (fwd - back).abs() * 0.5 * h0.max(h1) / (h0 + h1);
    }
    let mut tail_ratio = Vec::with_capacity(n);
    let mut deriv_ratio = Vec::with_capacity(n);
    let (mut bound, mut noise_max) = (0.0_f64, 0.0_f64);
    let (mut tmin, mut tmax, mut tsum, mut tcount) = (f64::INFINITY, 0.0_f64, 0.0, 0usize);
    let (mut pos, mut neg) = (0, 0);
    for i in 0..n {
        let scale = if r[i] > 0.0 { r[i].powf(gamma) } else { 1.0 };
        tail_ratio.push(f[i] / scale);
        if deriv[i].is_nan() {
            deriv_ratio.push(f64::NAN);
            continue;
        }
        let g = gamma * f[i] - r[i] * deriv[i];
        if !g.is_finite() {
            return Err(Error::InsufficientSamples(format!("non-finite derivative at eta = {}", r[i])));
        }
        if g >= 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
        deriv_ratio.push(g.abs() / scale);
        if r[i] >= lo * (1.0 - 1e-12) {
            bound = bound.max(g.abs() / scale);
            noise_max = noise_max.max(r[i] * noise[i] / scale);
        }
    }
    for i in 0..n {
        if r[i] >= lo * (1.0 - 1e-12) {
            tmin = tmin.min(tail_ratio[i]);
            tmax = tmax.max(tail_ratio[i]);
            tsum += tail_ratio[i];
            tcount += 1;
        }
    }
    let violations = f.windows(2).filter(|w| w[1] < w[0] * (1.0 - MONOTONE_TOL)).count();
    Ok(ProfileReport {
        gamma,
        window: [lo, hi],
        deriv_bound: bound,
        differencing_error: noise_max,
        tail_ratio_range: [tmin, tmax],
        tail_flatness: (tmax - tmin) / (tsum / tcount as f64),
        monotone_violations: violations,
        monotone_tolerance: MONOTONE_TOL,
        positive_samples: pos,
        negative_samples: neg,
        tail_ratio,
        deriv_ratio,
    })
}

/// `|x|^gamma` up to `0.7 L`, blended smoothly into the constant
/// `(0.8 L)^gamma` on `[0.7 L, 0.8 L]`.
pub fn truncated_power_data(grid: Grid, gamma: f64) -> Field {
    let l = grid.half_length();
    let cap = (0.8 * l).powf(gamma);
    Field::from_radial(grid, |r| {
        let w = smooth_step((r - 0.7 * l) / (0.1 * l));
        w * r.powf(gamma) + (1.0 - w) * cap
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionReport {
    pub exponents: SelfSimExponents,
    pub s: f64,
    pub times: Vec<f64>,
    /// Collapse region `|x| <= interior`.
    pub interior: f64,
    /// Sup relative error of `t^{-alpha1} U(eta t^{1/2s}, t)` against the
    /// quadrature profile on the interior, per snapshot.
    pub profile_errors: Vec<f64>,
    /// Same measure between the last two snapshots.
    pub collapse: f64,
    /// Sup relative error against the profile for `interior < |x| <= 0.9 L`
    /// (truncation contamination), per snapshot.
    pub boundary_errors: Vec<f64>,
    /// Log-log slope of `U(0, t)` and its relative gap to `alpha1`.
    pub growth_exponent: f64,
    pub growth_gap: f64,
}

/// Evolves the truncated data `|x|^gamma` with the linear equation and
/// compares the snapshots with the quadrature profile. Snapshot times
/// default to `[0.5, 1]`.
pub fn selfsim_evolution_check(gamma: f64, s: f64, grid: Grid, cfg: &StepperConfig) -> Result<EvolutionReport> {
    let ex = SelfSimExponents::new(gamma, s)?;
    if grid.dim() != 1 {
        return Err(invalid("grid.dim", "the evolution check runs on a 1D grid"));
    }
    let mut st = cfg.clone();
    if st.snapshot_times.is_empty() {
        st.snapshot_times = vec![0.5, 1.0];
    }
    st.snapshot_times.sort_by(f64::total_cmp);
    if st.snapshot_times.len() < 2 || st.snapshot_times[0] <= 0.0 {
        return Err(invalid("stepper.snapshot_times", "need at least two positive times"));
    }
    st.t_end = *st.snapshot_times.last().unwrap();
    let p = ModelParams::new(1, s, 1.0)?;
    let trace = run_fpme(&truncated_power_data(grid, gamma), &p, &st)?;
    let snaps: Vec<&Field> = st
        .snapshot_times
        .iter()
        .map(|&t| trace.snapshot_at(t).expect("snapshot recorded"))
        .collect();

    let l = grid.half_length();
    let interior = 0.4 * l;
    let eta_max = 0.9 * l / st.snapshot_times[0].powf(1.0 / (2.0 * s));
    let etas = profile_etas(1e-3, eta_max * 1.01, 400);
    let profile = selfsim_profile(gamma, s, 1, &etas)?;

    let rescaled = |u: &Field, x: f64| u.time.powf(-ex.alpha1) * u.interpolate([x, 0.0]);
    let mut profile_errors = Vec::new();
    let mut boundary_errors = Vec::new();
    for u in &snaps {
        let scale = u.time.powf(1.0 / (2.0 * s));
        let (xs, _) = u.positive_axis();
        let (mut inner, mut outer) = (0.0_f64, 0.0_f64);
        for &x in xs.iter().filter(|&&x| x <= 0.9 * l) {
            let fq = profile.interpolate(x / scale);
            let e = (rescaled(u, x) - fq).abs() / fq;
            if x <= interior {
                inner = inner.max(e);
            } else {
                outer = outer.max(e);
            }
        }
        profile_errors.push(inner);
        boundary_errors.push(outer);
    }
    let (a, b) = (snaps[snaps.len() - 2], snaps[snaps.len() - 1]);
    let (sa, sb) = (a.time.powf(1.0 / (2.0 * s)), b.time.powf(1.0 / (2.0 * s)));
    let mut collapse = 0.0_f64;
    for &x in b.positive_axis().0.iter().filter(|&&x| x <= interior) {
        let xa = x / sb * sa;
        let fb = rescaled(b, x);
        collapse = collapse.max((rescaled(a, xa) - fb).abs() / fb);
    }
    let lt: Vec<f64> = snaps.iter().map(|u| u.time.ln()).collect();
    let lu: Vec<f64> = snaps.iter().map(|u| u.interpolate([0.0, 0.0]).ln()).collect();
    let (slope, _) = least_squares(&lt, &lu);
    Ok(EvolutionReport {
        exponents: ex,
        s,
        times: st.snapshot_times.clone(),
        interior,
        profile_errors,
        collapse,
        boundary_errors,
        growth_exponent: slope,
        growth_gap: (slope - ex.alpha1).abs() / ex.alpha1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma as gamma_fn;

    /// `E|X|^p` for the isotropic stable law with characteristic function
    /// `exp(-|xi|^{2s})` in `N` dimensions.
    fn stable_moment(p: f64, s: f64, n: f64) -> f64 {
        2f64.powf(p) * gamma_fn((n + p) / 2.0) * gamma_fn(1.0 - p / (2.0 * s))
            / (gamma_fn(n / 2.0) * gamma_fn(1.0 - p / 2.0))
    }

    #[test]
    fn centre_value_is_the_stable_moment() {
        for (g, s, dim, tol) in [(0.5, 0.5, 1, 1e-8), (0.3, 0.75, 1, 1e-6), (0.5, 0.5, 2, 1e-5)] {
            let f = selfsim_profile(g, s, dim, &[0.0]).unwrap().values[0];
            let exact = stable_moment(g, s, dim as f64);
            assert!((f / exact - 1.0).abs() < tol, "({g}, {s}, {dim}): {f} vs {exact}");
        }
        assert!((stable_moment(0.5, 0.5, 1.0) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponents_and_domain() {
        let e = SelfSimExponents::new(0.3, 0.75).unwrap();
        assert!((e.alpha1 - 0.2).abs() < 1e-15 && (e.beta1 + 2.0 / 3.0).abs() < 1e-15);
        assert!(SelfSimExponents::new(1.0, 0.5).is_err());
        assert!(SelfSimExponents::new(0.0, 0.5).is_err());
        assert!(selfsim_profile(0.5, 0.5, 3, &[0.0]).is_err());
    }

    #[test]
    fn profile_is_monotone_with_a_flat_power_tail() {
        for (g, s) in [(0.5, 0.5), (0.3, 0.75)] {
            let p = selfsim_profile(g, s, 1, &profile_etas(1e-2, 1e3, 120)).unwrap();
            let rep = profile_derivative_bound(&p, g).unwrap();
            assert_eq!(rep.monotone_violations, 0);
            assert!(rep.tail_ratio_range[1] / rep.tail_ratio_range[0] <= 1.2);
            assert!(rep.tail_flatness <= 0.05);
        }
    }

    #[test]
    fn small_gamma_gives_nearly_constant_profile() {
        let p = selfsim_profile(1e-4, 0.5, 1, &[0.0, 0.5, 1.0, 5.0, 10.0]).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-3), "{:?}", p.values);
    }

    #[test]
    fn truncated_data_are_capped() {
        let grid = Grid::new(1, 1024, 100.0).unwrap();
        let u = truncated_power_data(grid, 0.5);
        let cap = 80f64.powf(0.5);
        assert!(u.max() <= cap * (1.0 + 1e-12));
        let i = grid.center_index() + 50;
        assert!((u.values[i] - grid.coord(i).sqrt()).abs() < 1e-12);
    }
}

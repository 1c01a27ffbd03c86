//! Level sets, spreading rates and the positivity iteration.

use std::f64::consts::PI;

use serde::Serialize;

use crate::diffusion::ProfileConstants;
use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::heat_kernel::least_squares;
use crate::kpp::{tau_rescale, KppRun};
use crate::params::{critical_exponents, ModelParams};

/// Angular rays used for 2D level radii.
pub const LEVEL_RAYS: usize = 64;
/// Minimum number of snapshots in a rate-fit window.
pub const MIN_FIT_POINTS: usize = 8;

fn check_level(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::LevelOutOfRange {
            lambda,
            range: "(0, 1)".into(),
        })
    }
}

/// Outermost crossing of `lambda` along samples `v` at radii `k * h`.
fn outer_crossing(v: impl Iterator<Item = f64>, h: f64, lambda: f64) -> f64 {
    let v: Vec<f64> = v.collect();
    match v.iter().rposition(|&x| x >= lambda) {
        None => 0.0,
        Some(k) if k + 1 == v.len() => k as f64 * h,
        Some(k) => {
            let (a, b) = (v[k], v[k + 1]);
            (k as f64 + (a - lambda) / (a - b)) * h
        }
    }
}

/// Largest `|x|` with `u >= lambda`, linearly interpolated between grid
/// points (1D: both half-lines; 2D: [`LEVEL_RAYS`] rays). Zero if `u`
/// stays below `lambda`.
pub fn level_radius(u: &Field, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    let g = u.grid;
    let h = g.spacing();
    let n = g.points_per_axis();
    let c = g.center_index();
    Ok(match g.dim() {
        1 => {
            let right = outer_crossing((c..n).map(|i| u.values[i]), h, lambda);
            let left = outer_crossing((0..=c).rev().map(|i| u.values[i]), h, lambda);
            right.max(left)
        }
        _ => {
            let steps = (g.half_length() / h).floor() as usize;
            (0..LEVEL_RAYS)
                .map(|j| {
                    let (sin, cos) = (2.0 * PI * j as f64 / LEVEL_RAYS as f64).sin_cos();
                    let ray = (0..=steps).map(|k| {
                        let r = k as f64 * h;
                        u.interpolate([r * cos, r * sin])
                    });
                    outer_crossing(ray, h, lambda)
                })
                .fold(0.0, f64::max)
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub level: f64,
    /// Slope of `log R_lambda(t)` against `t`.
    pub rate: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub points: usize,
    /// Largest absolute deviation of the fit in log space.
    pub residual: f64,
    pub target: Option<f64>,
    pub relative_gap: Option<f64>,
}

/// Least-squares fit of `log R` against `t` over the samples in `window`.
pub fn fit_rate_samples(
    times: &[f64],
    radii: &[f64],
    lambda: f64,
    window: [f64; 2],
    target: Option<f64>,
) -> Result<RateFit> {
    if times.len() != radii.len() {
        return Err(invalid("radii", "times and radii differ in length"));
    }
    let [lo, hi] = window;
    if !(hi > lo) {
        return Err(invalid("window", format!("need t_lo < t_hi, got [{lo}, {hi}]")));
    }
    let tol = 1e-9 * hi.abs().max(1.0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(radii)
        .filter(|(&t, _)| t >= lo - tol && t <= hi + tol)
        .map(|(&t, &r)| (t, r))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples(format!(
            "{} snapshots in [{lo}, {hi}], need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    if let Some((t, _)) = pts.iter().find(|(_, r)| !(*r > 0.0)) {
        return Err(Error::InsufficientSamples(format!("level radius is zero at t = {t}")));
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (rate, intercept) = least_squares(&ts, &ls);
    let residual = ts
        .iter()
        .zip(&ls)
        .map(|(t, l)| (l - rate * t - intercept).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        level: lambda,
        rate,
        intercept,
        window,
        points: pts.len(),
        residual,
        target,
        relative_gap: target.map(|s| (rate - s).abs() / s.abs()),
    })
}

/// [`fit_rate_samples`] on the radii recorded by a run.
pub fn fit_rate(run: &KppRun, lambda: f64, window: [f64; 2], target: Option<f64>) -> Result<RateFit> {
    let radii = run
        .radii(lambda)
        .ok_or_else(|| invalid("lambda", format!("level {lambda} was not recorded by the run")))?;
    fit_rate_samples(&run.snapshot_times, radii, lambda, window, target)
}

/// `[0.5 T, 0.9 T]`, shrunk so that `R(t_lo) >= 20 h` and `R(t_hi) <= L/2`.
pub fn default_fit_window(run: &KppRun, lambda: f64) -> Result<[f64; 2]> {
    let radii = run
        .radii(lambda)
        .ok_or_else(|| invalid("lambda", format!("level {lambda} was not recorded by the run")))?;
    let grid = run
        .trace
        .snapshots
        .first()
        .ok_or_else(|| Error::InsufficientSamples("run has no snapshots".into()))?
        .grid;
    let t_end = *run.snapshot_times.last().unwrap();
    let (r_min, r_max) = (20.0 * grid.spacing(), 0.5 * grid.half_length());
    let inside: Vec<f64> = run
        .snapshot_times
        .iter()
        .zip(radii)
        .filter(|(&t, &r)| t >= 0.5 * t_end - 1e-9 && t <= 0.9 * t_end + 1e-9 && r >= r_min && r <= r_max)
        .map(|(&t, _)| t)
        .collect();
    match (inside.first(), inside.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => Ok([lo, hi]),
        _ => Err(Error::InsufficientSamples(format!(
            "no snapshot in [0.5 T, 0.9 T] has {r_min} <= R <= {r_max}; enlarge the box or the horizon"
        ))),
    }
}

/// Initial data of the reaction-only problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionTail {
    /// `u0 = exp(-|x|^2)`
    Gaussian,
    /// `u0 = min(1, |x|^{-(N+2s)})`
    Power,
}

impl std::str::FromStr for ReactionTail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ReactionTail::Gaussian),
            "power" => Ok(ReactionTail::Power),
            other => Err(invalid("tail", format!("expected gaussian or power, got {other}"))),
        }
    }
}

impl ReactionTail {
    pub fn initial(self, p: &ModelParams, r: f64) -> f64 {
        match self {
            ReactionTail::Gaussian => (-r * r).exp(),
            ReactionTail::Power => r.max(1.0).powf(-(p.dim as f64 + 2.0 * p.s)),
        }
    }
}

/// Level radii of `u(x, t) = u0(x) e^{a t}`: `(e^{a t} / lambda)^{1/(N+2s)}`
/// for the power tail and `sqrt(a t + ln(1/lambda))` for the Gaussian.
pub fn reaction_only_levels(tail: ReactionTail, p: &ModelParams, lambda: f64, times: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::LevelOutOfRange {
            lambda,
            range: "(0, max u0 e^{at}]".into(),
        });
    }
    let a = p.fprime0();
    let q = p.dim as f64 + 2.0 * p.s;
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(invalid("times", format!("must be non-negative, got {t}")));
            }
            if lambda > (a * t).exp() {
                return Err(Error::LevelOutOfRange {
                    lambda,
                    range: format!("(0, {}] at t = {t}", (a * t).exp()),
                });
            }
            Ok(match tail {
                ReactionTail::Power => ((a * t).exp() / lambda).powf(1.0 / q),
                ReactionTail::Gaussian => (a * t - lambda.ln()).sqrt(),
            })
        })
        .collect()
}

/// One iteration step of the certificate with its internal checks.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateStep {
    pub k: usize,
    pub rho: f64,
    pub ratio: f64,
    pub tau1: f64,
    pub mass: f64,
    /// `min (v_k - B_{M_k}(., tau_1(rho_k))) / eps` over the sampled radii.
    pub barenblatt_margin: f64,
    /// Lower and upper admissibility of `rho_{k+1}/rho_k`.
    pub rho_lower_ok: bool,
    pub rho_upper_ok: bool,
    /// Lower estimate of `v(rho_{k+1}, t0) / eps`.
    pub level_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateState {
    pub sigma: f64,
    pub sigma2: f64,
    pub delta: f64,
    /// `f(delta) / delta`, the growth rate of the linearised subsolution.
    pub growth: f64,
    pub t0: f64,
    pub tau0: f64,
    pub eps: f64,
    pub eps0: f64,
    pub rho: Vec<f64>,
    /// Masses `M_k = c1 eps rho_k^N` (`M1` is the first).
    pub m1: f64,
    pub tau1: f64,
    #[serde(rename = "L")]
    pub ratios: Vec<f64>,
    #[serde(rename = "L_inf")]
    pub l_inf: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub k3: f64,
    pub k1: f64,
    pub k2: f64,
    pub f0: f64,
    pub steps: Vec<CertificateStep>,
    /// Every `L_k >= e^{sigma t0}` and every step check holds.
    pub accepted: bool,
}

impl CertificateState {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, meta: &[(String, String)]) -> Result<()> {
        writeln!(w, "# frackpp-certificate v1")?;
        for (k, v) in meta {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "k,rho,L")?;
        for (k, (r, l)) in self.rho.iter().zip(&self.ratios).enumerate() {
            writeln!(w, "{k},{r:.17e},{l:.17e}")?;
        }
        Ok(())
    }
}

fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    // pred(lo) false, pred(hi) true
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    hi
}

/// Runs the positivity iteration for a target speed `sigma < sigma_2`
/// with profile data of the unit-mass Barenblatt profile.
pub fn certificate_run(
    p: &ModelParams,
    sigma: f64,
    eps: f64,
    rho0: f64,
    k_max: usize,
    profile: &ProfileConstants,
) -> Result<CertificateState> {
    p.validate()?;
    let f = p
        .reaction
        .as_ref()
        .ok_or_else(|| invalid("reaction", "the certificate needs a reaction term"))?;
    let ex = critical_exponents(p)?;
    let (n, s, m, beta) = (p.dim as f64, p.s, p.m, ex.beta);
    let q = n + 2.0 * s;
    let sigma2 = ex.sigma2;
    if m <= p.m1() {
        return Err(invalid("m", "the certificate needs m > m_1"));
    }
    if !(sigma > 0.0 && sigma < sigma2) {
        return Err(invalid("sigma", format!("need 0 < sigma < sigma_2 = {sigma2}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    if !(rho0 > 1.0) {
        return Err(invalid("rho0", "must exceed 1"));
    }
    if k_max == 0 {
        return Err(invalid("k_max", "must be positive"));
    }
    let (k1, k2, f0) = (profile.k1, profile.k2, profile.f0);
    if !(k2 < 2.0 * k1) {
        return Err(Error::Infeasible(format!("profile constants need K2 < 2 K1 (K1 = {k1}, K2 = {k2})")));
    }

    // delta from the midpoint rule
    let target = 0.5 * (sigma2 + sigma.max(n * (m - 1.0) * beta * sigma2));
    let g = |d: f64| f.evaluate(d) / (q * d);
    if !(target < sigma2) || g(1.0 - 1e-12) >= target {
        return Err(Error::Infeasible(format!("no delta in (0, 1) with f(delta)/((N+2s) delta) = {target}")));
    }
    let delta = bisect(1e-12, 1.0 - 1e-12, |d| g(d) <= target);
    if !(g(delta) >= sigma && g(delta) >= n * (m - 1.0) * beta * sigma2 - 1e-12) {
        return Err(Error::Infeasible(format!("delta = {delta} violates the speed conditions")));
    }
    let growth = f.evaluate(delta) / delta;

    let c1 = f0.powf(-2.0 * s / q) * k1.powf(-n / q);
    let c2 = f0.powf((1.0 + 2.0 * (m - 1.0) * beta * s) / (beta * q)) * k1.powf(-2.0 * s / q);
    let c3 = c1.powf((m - 1.0) * beta) * c2.powf(beta);
    let k3 = (2.0 * k1 / k2) * c3.powf(q);
    let tau1_of = |rho: f64| c2 * eps.powf(1.0 - m) * rho.powf(2.0 * s);
    let tau1_unit = tau1_of(1.0);
    let tau = |t: f64| tau_rescale(t, m, growth);

    let cond1 = |t: f64| -> bool {
        let tau_ref = if m < 1.0 { 1.0 / ((1.0 - m) * growth) } else { tau(t) };
        growth * t - n * beta * (1.0 + tau_ref / tau1_unit).ln() >= k3.ln()
    };
    let cond2 = |t: f64| (k2 / (2.0 * k1)).ln() / q + (growth / q - sigma) * t >= 0.0;
    let both = |t: f64| cond1(t) && cond2(t);
    let mut hi = 1.0;
    while !both(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible("no t0 satisfies both start-time conditions".into()));
        }
    }
    let t0 = bisect(0.0, hi, both);
    // the conditions must hold from t0 on, not only at t0
    if (1..=64).any(|j| !both(t0 + (hi - t0).max(t0) * j as f64 / 16.0)) {
        return Err(Error::Infeasible("start-time conditions are not monotone beyond t0".into()));
    }
    let tau0 = tau(t0);
    let eps0 = delta * (-f.fprime0() * t0).exp();
    if !(eps < eps0) {
        return Err(Error::Infeasible(format!("eps = {eps} must be below eps0 = delta e^(-f'(0) t0) = {eps0}")));
    }

    let base = (k2 / (2.0 * k1)).powf(1.0 / q) * (growth * t0 / q).exp();
    let floor = (sigma * t0).exp();
    let mut rho = vec![rho0];
    let mut ratios = Vec::with_capacity(k_max);
    let mut steps = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let rk = rho[k];
        let t1 = tau1_of(rk);
        let ratio = base * (1.0 + tau0 / t1).powf(2.0 * s * beta / q);
        let mass = c1 * eps * rk.powf(n);
        let scale = mass.powf(m - 1.0) * t1;
        // v_k >= B_{M_k}(., tau_1) on log-spaced radii
        let b = |r: f64| mass * scale.powf(-ex.alpha) * profile.evaluate(r * scale.powf(-beta));
        let v = |r: f64| if r <= rk { eps } else { eps * (rk / r).powf(q) };
        let mut margin = (v(0.0) - b(0.0)) / eps;
        for j in 0..=400 {
            let r = rk * 1e-3 * 10f64.powf(j as f64 * 6.0 / 400.0);
            margin = margin.min((v(r) - b(r)) / eps);
        }
        let lower = c3 * (1.0 + tau0 / t1).powf(beta);
        let upper_q = (k2 / (2.0 * k1)) * (growth * t0).exp() * (1.0 + tau0 / t1).powf(2.0 * s * beta);
        let next = ratio * rk;
        let sc = mass.powf(m - 1.0) * (tau0 + t1);
        let x = next * sc.powf(-beta);
        let level = k2 * (growth * t0).exp() * mass * sc.powf(-ex.alpha) / (1.0 + x.powf(q));
        steps.push(CertificateStep {
            k,
            rho: rk,
            ratio,
            tau1: t1,
            mass,
            barenblatt_margin: margin,
            rho_lower_ok: ratio >= lower * (1.0 - 1e-12),
            rho_upper_ok: ratio.powf(q) <= upper_q * (1.0 + 1e-12),
            level_ratio: level / eps,
        });
        ratios.push(ratio);
        rho.push(next);
    }
    let accepted = base >= floor * (1.0 - 1e-12)
        && ratios.iter().all(|&l| l >= floor * (1.0 - 1e-12))
        && steps
            .iter()
            .all(|st| st.barenblatt_margin >= -1e-6 && st.rho_lower_ok && st.rho_upper_ok && st.level_ratio >= 1.0 - 1e-9);
    Ok(CertificateState {
        sigma,
        sigma2,
        delta,
        growth,
        t0,
        tau0,
        eps,
        eps0,
        m1: steps[0].mass,
        tau1: steps[0].tau1,
        rho,
        ratios,
        l_inf: base,
        c1,
        c2,
        c3,
        k3,
        k1,
        k2,
        f0,
        steps,
        accepted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub sigma: f64,
    pub eps: f64,
    /// `(t, min u over |x| <= e^{sigma t})` per snapshot.
    pub ball_minima: Vec<(f64, f64)>,
    /// Earliest snapshot time from which every ball minimum is `>= eps`.
    pub t_lower: Option<f64>,
    /// Smallest ball minimum from `t_lower` on.
    pub eps_found: Option<f64>,
    /// The ball outgrew the box at some snapshot (minimum over the box).
    pub ball_exceeds_box: bool,
}

/// Minimum of `u` over `|x| <= min(r, L)`.
pub fn ball_minimum(u: &Field, r: f64) -> f64 {
    let g = u.grid;
    let mut min = f64::INFINITY;
    for (i, &v) in u.values.iter().enumerate() {
        if g.radius(i) <= r {
            min = min.min(v);
        }
    }
    if min.is_finite() {
        min
    } else {
        u.values[match g.dim() {
            1 => g.center_index(),
            _ => g.center_index() * g.points_per_axis() + g.center_index(),
        }]
    }
}

pub fn positivity_floor_check(run: &KppRun, sigma: f64, eps: f64) -> PositivityReport {
    let mut exceeds = false;
    let ball_minima: Vec<(f64, f64)> = run
        .trace
        .snapshots
        .iter()
        .map(|u| {
            let r = (sigma * u.time).exp();
            exceeds |= r > u.grid.half_length();
            (u.time, ball_minimum(u, r))
        })
        .collect();
    let first_ok = ball_minima
        .iter()
        .rposition(|&(_, v)| v < eps)
        .map_or(0, |k| k + 1);
    let (t_lower, eps_found) = if first_ok < ball_minima.len() {
        let tail = &ball_minima[first_ok..];
        (Some(tail[0].0), Some(tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)))
    } else {
        (None, None)
    };
    PositivityReport {
        sigma,
        eps,
        ball_minima,
        t_lower,
        eps_found,
        ball_exceeds_box: exceeds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{ProfileConstants, StepperConfig};
    use crate::grid::Grid;
    use crate::heat_kernel::log_radii;
    use crate::initial::{gaussian, power_tail, smooth_plateau};
    use crate::kpp::{run_kpp, KppOptions};
    use crate::params::ReactionSpec;

    fn logistic(m: f64) -> ModelParams {
        ModelParams::new(1, 0.5, m).unwrap().with_logistic(1.0).unwrap()
    }

    fn snapshots(t_end: f64, every: f64) -> StepperConfig {
        StepperConfig {
            dt: 0.01,
            t_end,
            snapshot_times: (1..=(t_end / every).round() as usize).map(|k| k as f64 * every).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn level_radius_interpolates_and_is_monotone_in_lambda() {
        let grid = Grid::new(1, 1024, 50.0).unwrap();
        // u = 1 - |x|/10 on |x| <= 10 is linear between nodes
        let u = Field::from_radial(grid, |r| (1.0 - r / 10.0).max(0.0));
        for l in [0.1, 0.25, 0.5, 0.9] {
            assert!((level_radius(&u, l).unwrap() - 10.0 * (1.0 - l)).abs() < 1e-12);
        }
        let g = gaussian(Grid::new(2, 64, 8.0).unwrap(), 1.0, 2.0).unwrap();
        let radii: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&l| level_radius(&g, l).unwrap()).collect();
        assert!(radii.windows(2).all(|w| w[0] >= w[1]));
        // exp(-r^2/4) = 1/2 at r = 2 sqrt(ln 2)
        assert!((radii[2] - 2.0 * 2f64.ln().sqrt()).abs() < 0.02);
        assert!(level_radius(&u, 1.5).is_err());
    }

    #[test]
    fn fit_rate_recovers_exact_exponentials() {
        let times: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
        for rate in [0.25, 0.5, 0.7] {
            let radii: Vec<f64> = times.iter().map(|t| 3.0 * (rate * t).exp()).collect();
            let fit = fit_rate_samples(&times, &radii, 0.5, [1.0, 9.0], Some(rate)).unwrap();
            assert!((fit.rate - rate).abs() < 1e-12);
            assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
            assert!(fit.relative_gap.unwrap() < 1e-12);
        }
        assert!(fit_rate_samples(&times, &times, 0.5, [1.0, 2.0], None).is_err());
    }

    #[test]
    fn reaction_only_closed_forms() {
        let p = logistic(1.0);
        let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let g = reaction_only_levels(ReactionTail::Gaussian, &p, 0.5, &times).unwrap();
        let w = reaction_only_levels(ReactionTail::Power, &p, 0.5, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((g[i] * g[i] - (t + 2f64.ln())).abs() < 1e-10);
            assert!((w[i].ln() - (t + 2f64.ln()) / 2.0).abs() < 1e-10);
            // the level set is exact: u0(R) e^t = lambda
            assert!((ReactionTail::Gaussian.initial(&p, g[i]) * t.exp() - 0.5).abs() < 1e-10);
        }
        assert!(reaction_only_levels(ReactionTail::Power, &p, 2.0, &[0.0]).is_err());
    }

    #[test]
    fn positivity_of_equilibrium_and_of_a_slow_ball() {
        let grid = Grid::new(1, 2048, 1024.0).unwrap();
        let p = logistic(1.0);
        let cfg = snapshots(10.0, 1.0);
        let one = Field::from_radial(grid, |_| 1.0);
        let rep = positivity_floor_check(&run_kpp(&one, &p, &cfg, &KppOptions::default()).unwrap(), 0.25, 1.0);
        assert_eq!((rep.t_lower, rep.eps_found), (Some(1.0), Some(1.0)));

        let u0 = smooth_plateau(grid, 1.0, 1.0, 2.0).unwrap();
        let run = run_kpp(&u0, &p, &cfg, &KppOptions::default()).unwrap();
        let slow = positivity_floor_check(&run, 0.25, 0.1);
        assert!(slow.t_lower.is_some() && slow.eps_found.unwrap() >= 0.1);
        // twice the critical rate: the ball escapes the front
        let fast = positivity_floor_check(&run, 1.0, 0.1);
        assert!(fast.t_lower.is_none());
        let inside: Vec<(f64, f64)> = fast.ball_minima.iter().copied().filter(|m| m.0.exp() < 1024.0).collect();
        assert!(inside.windows(2).all(|w| w[1].1 < w[0].1), "{inside:?}");
        assert!(inside.last().unwrap().1 < 0.01);
    }

    #[test]
    fn rates_depend_on_the_reaction_only_through_its_slope() {
        let grid = Grid::new(1, 8192, 4096.0).unwrap();
        let u0 = smooth_plateau(grid, 1.0, 1.0, 2.0).unwrap();
        let cfg = snapshots(15.0, 0.25);
        let base = ModelParams::new(1, 0.5, 1.0).unwrap();
        let fits: Vec<RateFit> = [ReactionSpec::logistic(1.0).unwrap(), ReactionSpec::damped_logistic(1.0).unwrap()]
            .into_iter()
            .map(|f| {
                let run = run_kpp(&u0, &base.clone().with_reaction(f), &cfg, &KppOptions::default()).unwrap();
                fit_rate(&run, 0.5, default_fit_window(&run, 0.5).unwrap(), Some(0.5)).unwrap()
            })
            .collect();
        let gap = (fits[0].rate - fits[1].rate).abs();
        assert!(gap <= fits[0].residual + fits[1].residual, "{fits:?}");
    }

    #[test]
    fn admissible_tail_decays_beyond_twice_the_critical_rate() {
        let grid = Grid::new(1, 8192, 4096.0).unwrap();
        let p = logistic(1.0);
        let u0 = power_tail(grid, 1.0, 2.0).unwrap();
        let run = run_kpp(&u0, &p, &snapshots(8.0, 1.0), &KppOptions::default()).unwrap();
        let at = |u: &Field| u.interpolate([u.time.exp(), 0.0]);
        let v: Vec<f64> = run.trace.snapshots.iter().filter(|u| u.time >= 4.0).map(at).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        assert!(*v.last().unwrap() < 0.05);
    }

    #[test]
    fn accepted_certificates_satisfy_every_step() {
        let p = logistic(1.0);
        let mut radii = vec![0.0];
        radii.extend(log_radii(1e-2, 1e4, 200));
        let profile = ProfileConstants::from_kernel(0.5, 1, &radii).unwrap();
        for frac in [0.25, 0.5, 0.75] {
            let st = certificate_run(&p, frac * 0.5, 1e-6, 2.0, 20, &profile).unwrap();
            assert!(st.accepted);
            assert!(st.eps < st.eps0);
            let floor = (st.sigma * st.t0).exp();
            for step in &st.steps {
                assert!(step.barenblatt_margin >= -1e-12, "{step:?}");
                assert!(step.rho_lower_ok && step.rho_upper_ok && step.level_ratio >= 1.0);
            }
            assert!(st.ratios.iter().all(|&l| l >= floor * (1.0 - 1e-12)));
            assert!((st.ratios[19] / st.l_inf - 1.0).abs() < 0.01);
        }
        assert!(certificate_run(&p, 0.6, 1e-6, 2.0, 20, &profile).is_err());
    }
}

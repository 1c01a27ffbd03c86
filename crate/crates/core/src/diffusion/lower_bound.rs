//! Small-time lower bound `u(x, t) >= C_* t |x|^{-(N+2s)}` far from the
//! initial support.

use serde::Serialize;

use super::{run_fpme, StepperConfig};
use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::heat_kernel::least_squares;
use crate::params::ModelParams;
use crate::tails::{periodic_power_sum, periodized_tail_fit};

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub times: Vec<f64>,
    /// Periodized tail exponent of `u(., t)` on the window, per time.
    pub spatial_exponents: Vec<f64>,
    /// `A(t)` in `u ~ A(t) |x|^{-(N+2s)}` (periodized, exponent fixed).
    pub prefactors: Vec<f64>,
    pub mean_spatial_exponent: f64,
    /// Log-log slope of `A(t)` against `t`.
    pub time_exponent: f64,
    /// Largest `C` with `u >= C t |x|^{-(N+2s)}` on all sampled points.
    pub c_star: f64,
    pub window: [f64; 2],
}

/// Evolves `u0` with snapshots at `times` and fits the tail on
/// `r_lo <= |x| <= L/2` at each time.
pub fn verify_lower_parabolic_estimate(
    u0: &Field,
    p: &ModelParams,
    cfg: &StepperConfig,
    times: &[f64],
    r_lo: f64,
) -> Result<LowerBoundReport> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times", "need at least two increasing sample times"));
    }
    let half = u0.grid.half_length();
    let r_hi = 0.5 * half;
    if !(r_lo >= 1.0 && r_lo < r_hi) {
        return Err(invalid("r_lo", format!("need 1 <= r_lo < L/2 = {r_hi}, got {r_lo}")));
    }
    let mut st = cfg.clone();
    st.t_end = *times.last().unwrap();
    st.snapshot_times = times.to_vec();
    let trace = run_fpme(u0, p, &st)?;
    let q = p.dim as f64 + 2.0 * p.s;
    let mut spatial = Vec::new();
    let mut prefactors = Vec::new();
    let mut c_star = f64::INFINITY;
    for &t in times {
        let u = trace
            .snapshot_at(t)
            .ok_or_else(|| invalid("times", format!("no snapshot recorded at t = {t}")))?;
        let (radii, values) = u.positive_axis();
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .zip(&values)
            .filter(|(&r, _)| r >= r_lo && r <= r_hi)
            .map(|(&r, &v)| (r, v))
            .collect();
        if pts.iter().any(|&(_, v)| v <= cfg.positivity_floor) {
            return Err(Error::InsufficientSamples(format!(
                "tail below the positivity floor at t = {t}; enlarge the grid or lower the floor"
            )));
        }
        spatial.push(periodized_tail_fit(u, r_lo, r_hi)?.exponent);
        let ln_a = pts
            .iter()
            .map(|&(r, v)| v.ln() - periodic_power_sum(p.dim, r, half, q).ln())
            .sum::<f64>()
            / pts.len() as f64;
        prefactors.push(ln_a.exp());
        for &(r, v) in &pts {
            c_star = c_star.min(v / (t * r.powf(-q)));
        }
    }
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let la: Vec<f64> = prefactors.iter().map(|a| a.ln()).collect();
    let (time_exponent, _) = least_squares(&lt, &la);
    Ok(LowerBoundReport {
        times: times.to_vec(),
        mean_spatial_exponent: spatial.iter().sum::<f64>() / spatial.len() as f64,
        spatial_exponents: spatial,
        prefactors,
        time_exponent,
        c_star,
        window: [r_lo, r_hi],
    })
}

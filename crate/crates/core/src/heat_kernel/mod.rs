//! The fractional heat kernel `K_s(x, t) = t^{-N/2s} f(t^{-1/2s} |x|)`.
//!
//! The profile `f` is evaluated from its Hankel-transform representation.
//! For `r >= 1` the oscillatory integral is split at the zeros of `J_nu`
//! and the alternating interval sums are accelerated by repeated
//! averaging. For `r < 1` the inverse transform of `exp(-|xi|^{2s})` is
//! integrated directly in frequency.

mod bessel;
pub(crate) mod quadrature;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use bessel::bessel_j;

use crate::error::{invalid, Error, Result};
use crate::special::gamma;
use bessel::{bessel_j_unchecked, bessel_zero};
use quadrature::{averaged_limit, integrate, integrate_graded};

const CROSSOVER_RADIUS: f64 = 1.0;
const GRADED_LEVELS: usize = 50;
const AVERAGING_DEPTH: usize = 16;
const MIN_INTERVALS: usize = 40;
const MAX_INTERVALS: usize = 200_000;
const DEFAULT_DIFF_STEP: f64 = 1e-4;

/// A radial profile sampled on increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub dim: usize,
    pub meta: BTreeMap<String, f64>,
}

impl RadialProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(invalid("values", "radii and values differ in length"));
        }
        if radii.is_empty() {
            return Err(Error::InsufficientSamples("empty profile".into()));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("radii", "must be non-negative and strictly increasing"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            radii,
            values,
            dim,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: f64) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// True when no value exceeds its predecessor by more than `tol`
    /// relative to the profile maximum.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        self.values.windows(2).all(|w| w[1] <= w[0] + tol * scale)
    }

    /// `|S^{N-1}| * int f(r) r^{N-1} dr` by piecewise quadratic quadrature
    /// on the samples, plus a power-law extrapolation of the last two
    /// samples beyond the final radius (two-term kernel tail when `s` is in
    /// the metadata).
    pub fn radial_mass(&self) -> Result<f64> {
        if self.len() < 3 {
            return Err(Error::InsufficientSamples("radial mass needs three samples".into()));
        }
        let n = self.dim as i32;
        let g: Vec<f64> = self
            .radii
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| v * r.powi(n - 1))
            .collect();
        let mut total = 0.0;
        let mut i = 0;
        while i + 2 < self.len() {
            total += quadratic_panel(&self.radii[i..i + 3], &g[i..i + 3]);
            i += 2;
        }
        if i + 1 < self.len() {
            total += 0.5 * (self.radii[i + 1] - self.radii[i]) * (g[i] + g[i + 1]);
        }
        let k = self.len();
        let (r1, r2) = (self.radii[k - 2], self.radii[k - 1]);
        let (v1, v2) = (self.values[k - 2], self.values[k - 1]);
        if let (Some(&s), true) = (self.meta.get("s"), r1 > 0.0) {
            // kernel tails: f ~ a r^{-q} + b r^{-q-2s} with q = N + 2s
            let q = self.dim as f64 + 2.0 * s;
            let (x1, x2) = (r1.powf(-q), r2.powf(-q));
            let (y1, y2) = (r1.powf(-q - 2.0 * s), r2.powf(-q - 2.0 * s));
            let det = x1 * y2 - x2 * y1;
            let a = (v1 * y2 - v2 * y1) / det;
            let b = (x1 * v2 - x2 * v1) / det;
            total += a * r2.powf(-2.0 * s) / (2.0 * s) + b * r2.powf(-4.0 * s) / (4.0 * s);
        } else if v1 > 0.0 && v2 > 0.0 && r1 > 0.0 {
            let p = -(v2 / v1).ln() / (r2 / r1).ln();
            let excess = p - self.dim as f64;
            if excess <= 0.0 {
                return Err(Error::InsufficientSamples(
                    "profile tail is not integrable at the final radius".into(),
                ));
            }
            total += v2 * r2.powi(n) / excess;
        }
        Ok(sphere_area(self.dim) * total)
    }

    /// Log-log linear interpolation, clamped to the sampled range.
    pub fn interpolate(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|&x| x <= r);
        if k == 0 {
            return self.values[0];
        }
        if k >= self.len() {
            return self.values[self.len() - 1];
        }
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        if r0 > 0.0 && v0 > 0.0 && v1 > 0.0 {
            let w = (r / r0).ln() / (r1 / r0).ln();
            (v0.ln() + w * (v1 / v0).ln()).exp()
        } else {
            v0 + (r - r0) / (r1 - r0) * (v1 - v0)
        }
    }

    pub fn write_csv(&self, path: &Path, value_name: &str) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# frackpp-profile v1")?;
        writeln!(out, "# dim = {}", self.dim)?;
        for (k, v) in &self.meta {
            writeln!(out, "# {k} = {v:.17e}")?;
        }
        writeln!(out, "r,{value_name}")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            writeln!(out, "{r:.17e},{v:.17e}")?;
        }
        Ok(())
    }
}

fn quadratic_panel(x: &[f64], y: &[f64]) -> f64 {
    let (a, b, c) = (x[0], x[1], x[2]);
    let h = c - a;
    // weights of the interpolating quadratic through three nodes
    let wa = h * (2.0 * a + c - 3.0 * b) / (6.0 * (a - b));
    let wc = h * (a + 2.0 * c - 3.0 * b) / (6.0 * (c - b));
    let wb = h - wa - wc;
    wa * y[0] + wb * y[1] + wc * y[2]
}

/// Surface measure of the unit sphere in R^N (2 for N = 1).
pub fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Power law `constant * r^exponent` fitted to the tail of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailLaw {
    pub exponent: f64,
    pub constant: f64,
    pub window: [f64; 2],
    pub residual: f64,
    pub expected_exponent: f64,
}

/// Fit over the final decade of the profile.
pub fn tail_fit(p: &RadialProfile, expected_exponent: f64) -> Result<TailLaw> {
    let r_hi = *p.radii.last().expect("profile is never empty");
    let r_lo = r_hi / 10.0;
    if r_lo < 1.0 {
        return Err(Error::InsufficientSamples(format!(
            "tail fit needs samples up to r >= 10, profile ends at {r_hi}"
        )));
    }
    tail_fit_window(p, expected_exponent, r_lo, r_hi)
}

/// Least-squares slope of `log |value|` against `log r` over `[r_lo, r_hi]`.
///
/// The constant is the mean of `value * r^{-expected}` over the upper half
/// (in log-radius) of the window, keeping the sign of the values.
pub fn tail_fit_window(p: &RadialProfile, expected_exponent: f64, r_lo: f64, r_hi: f64) -> Result<TailLaw> {
    if !(r_lo >= 1.0 && r_hi > r_lo) {
        return Err(invalid("window", format!("need 1 <= r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    let pts: Vec<(f64, f64)> = p
        .radii
        .iter()
        .zip(&p.values)
        .filter(|(&r, _)| r >= r_lo * (1.0 - 1e-12) && r <= r_hi * (1.0 + 1e-12))
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in tail window [{r_lo}, {r_hi}], need 5",
            pts.len()
        )));
    }
    let sign = pts[0].1.signum();
    if sign == 0.0 || pts.iter().any(|&(_, v)| v.signum() != sign) {
        return Err(Error::InsufficientSamples("tail values change sign or vanish".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|&(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, v)| v.abs().ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| ((y - intercept - slope * x).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    let mid = 0.5 * (r_lo.ln() + r_hi.ln());
    let upper: Vec<f64> = pts
        .iter()
        .filter(|&&(r, _)| r.ln() >= mid)
        .map(|&(r, v)| v * r.powf(-expected_exponent))
        .collect();
    let constant = upper.iter().sum::<f64>() / upper.len() as f64;
    Ok(TailLaw {
        exponent: slope,
        constant,
        window: [r_lo, r_hi],
        residual,
        expected_exponent,
    })
}

pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn check_kernel_args(s: f64, dim: usize) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
    }
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    Ok(())
}

/// `C_1(N, s) = s 2^{2s} pi^{-(1+N/2)} sin(pi s) Gamma(s) Gamma(s + N/2)`,
/// the limit of `f(r) r^{N+2s}`.
pub fn asymptotic_constant(dim: usize, s: f64) -> Result<f64> {
    check_kernel_args(s, dim)?;
    let n = dim as f64;
    Ok(s * 4f64.powf(s) * PI.powf(-(1.0 + n / 2.0)) * (PI * s).sin() * gamma(s) * gamma(s + n / 2.0))
}

/// The profile `f(r)` at a single radius.
pub fn kernel_value(s: f64, dim: usize, r: f64) -> Result<f64> {
    check_kernel_args(s, dim)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("radius must be finite and >= 0, got {r}")));
    }
    let n = dim as f64;
    let nu = (n - 2.0) / 2.0;
    let norm = (2.0 * PI).powf(-n / 2.0);
    if r == 0.0 {
        return Ok(norm * gamma(n / (2.0 * s)) / (2.0 * s * 2f64.powf(nu) * gamma(nu + 1.0)));
    }
    if r < CROSSOVER_RADIUS {
        Ok(norm * near_field(s, dim, r)?)
    } else {
        Ok(norm * r.powf(-n) * far_field(s, dim, r)?)
    }
}

/// `K_s(x, t)` as a function of `|x|` and `t > 0`.
pub fn heat_kernel(s: f64, dim: usize, x_norm: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("time must be positive, got {t}")));
    }
    let scale = t.powf(-1.0 / (2.0 * s));
    Ok(scale.powi(dim as i32) * kernel_value(s, dim, x_norm * scale)?)
}

/// `z^{-nu} J_nu(z)`, continuous at zero.
fn scaled_bessel(nu: f64, z: f64) -> f64 {
    if z < 1e-8 {
        1.0 / (2f64.powf(nu) * gamma(nu + 1.0))
    } else {
        bessel_j_unchecked(nu, z) / z.powf(nu)
    }
}

/// `int_0^inf exp(-k^{2s}) k^{N-1} (kr)^{-nu} J_nu(kr) dk`.
fn near_field(s: f64, dim: usize, r: f64) -> Result<f64> {
    let nu = (dim as f64 - 2.0) / 2.0;
    let g = |k: f64| (-k.powf(2.0 * s)).exp() * k.powi(dim as i32 - 1) * scaled_bessel(nu, k * r);
    oscillatory_sum(nu, 1.0 / r, r, g)
}

/// `int_0^inf exp(-(w/r)^{2s}) w^{N/2} J_nu(w) dw`.
fn far_field(s: f64, dim: usize, r: f64) -> Result<f64> {
    let n = dim as f64;
    let nu = (n - 2.0) / 2.0;
    let g = |w: f64| (-(w / r).powf(2.0 * s)).exp() * w.powf(n / 2.0) * bessel_j_unchecked(nu, w);
    oscillatory_sum(nu, 1.0, r, g)
}

/// Integral of `g` over the half-line, split at `scale * j_{nu,k}`. The
/// first interval is graded towards the origin; the alternating tail is
/// summed with repeated averaging of the partial sums.
fn oscillatory_sum(nu: f64, scale: f64, r: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = scale * bessel_zero(nu, 1);
    let mut sum = integrate_graded(0.0, lo, GRADED_LEVELS, &g);
    let mut partial = vec![sum];
    let mut max_term = sum.abs();
    let mut previous: Option<f64> = None;
    let mut achieved = f64::INFINITY;
    for k in 2..MAX_INTERVALS {
        let hi = scale * bessel_zero(nu, k);
        let term = integrate(lo, hi, &g);
        lo = hi;
        sum += term;
        partial.push(sum);
        max_term = max_term.max(term.abs());
        if term.abs() < 1e-17 * max_term {
            return Ok(sum);
        }
        if k < MIN_INTERVALS {
            continue;
        }
        let estimate = averaged_limit(&partial, AVERAGING_DEPTH).expect("enough partial sums");
        if let Some(prev) = previous {
            achieved = (estimate - prev).abs();
            if achieved < 1e-15 * max_term {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
    }
    Err(Error::Quadrature { r, achieved })
}

/// Samples `f` on the given radii (evaluated in parallel).
pub fn kernel_profile(s: f64, dim: usize, radii: &[f64]) -> Result<RadialProfile> {
    check_kernel_args(s, dim)?;
    let values = radii
        .par_iter()
        .map(|&r| kernel_value(s, dim, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile::new(radii.to_vec(), values, dim)?.with_meta("s", s))
}

/// `n` radii spaced geometrically from `r_lo` to `r_hi` inclusive.
pub fn log_radii(r_lo: f64, r_hi: f64, n: usize) -> Vec<f64> {
    let ratio = (r_hi / r_lo).ln() / (n - 1) as f64;
    (0..n).map(|k| r_lo * (ratio * k as f64).exp()).collect()
}

/// Tail behaviour of `N f(r) + r f'(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeTail {
    pub law: TailLaw,
    pub radii: Vec<f64>,
    pub brackets: Vec<f64>,
    /// Limit predicted from `C_1`: `-2s C_1(N, s)`.
    pub predicted_constant: f64,
    /// `d/dt K_s > 0` at every tail radius (bracket negative throughout the fit window).
    pub time_increasing: bool,
}

pub fn derivative_tail_check(s: f64, dim: usize, radii: &[f64]) -> Result<DerivativeTail> {
    derivative_tail_check_with_step(s, dim, radii, DEFAULT_DIFF_STEP)
}

/// The bracket `N f + r f'` at each radius by Richardson-extrapolated
/// centred differences with relative step `rel_step`, then a tail fit of
/// the bracket over the final decade.
pub fn derivative_tail_check_with_step(s: f64, dim: usize, radii: &[f64], rel_step: f64) -> Result<DerivativeTail> {
    check_kernel_args(s, dim)?;
    if !(rel_step > 0.0 && rel_step <= 1e-2) {
        return Err(invalid("rel_step", format!("must lie in (0, 0.01], got {rel_step}")));
    }
    let min_ratio = radii
        .windows(2)
        .map(|w| w[1] / w[0] - 1.0)
        .fold(f64::INFINITY, f64::min);
    if 4.0 * rel_step >= min_ratio {
        return Err(invalid(
            "rel_step",
            format!("differencing step {rel_step} is too coarse for radii spaced at relative {min_ratio}"),
        ));
    }
    let brackets = radii
        .par_iter()
        .map(|&r| bracket(s, dim, r, rel_step))
        .collect::<Result<Vec<_>>>()?;
    let profile = RadialProfile::new(radii.to_vec(), brackets.clone(), dim)?;
    let n = dim as f64;
    let law = tail_fit(&profile, -(n + 2.0 * s))?;
    let time_increasing = radii
        .iter()
        .zip(&brackets)
        .filter(|(&r, _)| r >= law.window[0])
        .all(|(_, &b)| b < 0.0);
    Ok(DerivativeTail {
        law,
        radii: radii.to_vec(),
        brackets,
        predicted_constant: -2.0 * s * asymptotic_constant(dim, s)?,
        time_increasing,
    })
}

fn bracket(s: f64, dim: usize, r: f64, h: f64) -> Result<f64> {
    let f = |x: f64| kernel_value(s, dim, x);
    let d1 = (f(r * (1.0 + h))? - f(r * (1.0 - h))?) / (2.0 * h);
    let d2 = (f(r * (1.0 + 2.0 * h))? - f(r * (1.0 - 2.0 * h))?) / (4.0 * h);
    let r_fprime = (4.0 * d1 - d2) / 3.0;
    Ok(dim as f64 * f(r)? + r_fprime)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Large-r series for N = 1, convergent for s < 1/2.
    fn series_1d(s: f64, r: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            fact *= kf;
            let t = gamma(2.0 * s * kf + 1.0) / fact * (PI * s * kf).sin() * r.powf(-(2.0 * s * kf + 1.0));
            sum += if k % 2 == 1 { t } else { -t };
        }
        sum / PI
    }

    /// Small-r series for N = 1, s > 1/2: f(r) = (1/pi) sum (-1)^j Gamma((2j+1)/2s) r^{2j} / (2s (2j)!).
    fn small_r_1d(s: f64, r: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for j in 0..40 {
            if j > 0 {
                fact *= (2 * j - 1) as f64 * (2 * j) as f64;
            }
            let t = gamma((2 * j + 1) as f64 / (2.0 * s)) * r.powi(2 * j) / (2.0 * s * fact);
            sum += if j % 2 == 0 { t } else { -t };
        }
        sum / PI
    }

    #[test]
    fn cauchy_closed_form() {
        for &r in &[0.0, 0.2, 0.7, 0.99, 1.0, 1.5, 3.0, 17.0, 250.0, 1e4] {
            let exact = 1.0 / (PI * (1.0 + r * r));
            let got = kernel_value(0.5, 1, r).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-9, "r = {r}: {got} vs {exact}");
        }
    }

    #[test]
    fn series_oracles() {
        for &r in &[2.0, 5.0, 40.0] {
            let exact = series_1d(0.25, r);
            let got = kernel_value(0.25, 1, r).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-8, "s = 1/4, r = {r}: {got} vs {exact}");
        }
        for &r in &[0.1, 0.5, 0.9, 1.2, 2.0] {
            let exact = small_r_1d(0.75, r);
            let got = kernel_value(0.75, 1, r).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-8, "s = 3/4, r = {r}: {got} vs {exact}");
        }
    }

    #[test]
    fn poisson_kernel_2d() {
        // K_{1/2}(x, 1) = Gamma(3/2) / pi^{3/2} (1 + r^2)^{-3/2} in 2D
        let c = gamma(1.5) / PI.powf(1.5);
        for &r in &[0.0_f64, 0.3, 1.0, 4.0, 100.0] {
            let exact = c * (1.0 + r * r).powf(-1.5);
            let got = kernel_value(0.5, 2, r).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-9, "r = {r}: {got} vs {exact}");
        }
    }

    #[test]
    fn asymptotic_constant_values() {
        assert!((asymptotic_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-13);
        assert!(asymptotic_constant(1, 1.0 - 1e-9).unwrap() < 1e-7);
        // N = 1: Gamma(2s + 1) sin(pi s) / pi
        for &s in &[0.2, 0.4, 0.8] {
            let alt = gamma(2.0 * s + 1.0) * (PI * s).sin() / PI;
            assert!((asymptotic_constant(1, s).unwrap() - alt).abs() < 1e-12);
        }
        assert!(asymptotic_constant(1, 1.0).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let radii = log_radii(1.0, 100.0, 30);
        let values: Vec<f64> = radii.iter().map(|r| 3.0 * r.powi(-2)).collect();
        let p = RadialProfile::new(radii, values, 1).unwrap();
        let law = tail_fit(&p, -2.0).unwrap();
        assert!((law.exponent + 2.0).abs() < 1e-12);
        assert!((law.constant - 3.0).abs() < 1e-12);
        assert!(law.residual <= 1e-12);
    }

    #[test]
    fn tail_fit_needs_a_decade() {
        let radii = log_radii(1.0, 5.0, 30);
        let values: Vec<f64> = radii.iter().map(|r| r.powi(-2)).collect();
        let p = RadialProfile::new(radii, values, 1).unwrap();
        assert!(matches!(tail_fit(&p, -2.0), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn scaling_identity() {
        let (s, x, t, lambda) = (0.3, 1.7, 0.8, 2.5_f64);
        let a = heat_kernel(s, 1, x, t).unwrap();
        let b = heat_kernel(s, 1, lambda.powf(0.5 / s) * x, lambda * t).unwrap();
        assert!((b / a - lambda.powf(-0.5 / s)).abs() < 1e-12);
    }

    #[test]
    fn cauchy_bracket() {
        let radii = log_radii(2.0, 200.0, 40);
        let tail = derivative_tail_check(0.5, 1, &radii).unwrap();
        for (&r, &b) in tail.radii.iter().zip(&tail.brackets) {
            let exact = (1.0 - r * r) / (PI * (1.0 + r * r).powi(2));
            assert!((b - exact).abs() < 1e-6 * exact.abs(), "r = {r}");
        }
        assert!(tail.time_increasing);
        assert!((tail.law.constant + 1.0 / PI).abs() < 1e-3);
    }
}

//! Power-law tail fits of gridded fields.
//!
//! On a periodic box a tail `C |x|^{-p}` is contaminated by its images
//! `C |x + 2kL|^{-p}`. The periodized fit models the full lattice sum, so
//! the fitted exponent is that of the free-space tail.

use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::heat_kernel::{least_squares, TailLaw};

const IMAGE_SHELLS: i64 = 200;
/// Largest admissible ratio of the subleading to the leading term.
const MAX_CORRECTION: f64 = 0.5;

/// `sum_k |x + 2kL|^{-p}` in 1D or the 2D lattice sum along the first axis,
/// with the far shells replaced by their integral.
pub fn periodic_power_sum(dim: usize, x: f64, half_length: f64, p: f64) -> f64 {
    let period = 2.0 * half_length;
    let shells = if dim == 1 { IMAGE_SHELLS } else { 30 };
    let mut sum = 0.0;
    match dim {
        1 => {
            for k in -shells..=shells {
                sum += (x + k as f64 * period).abs().powf(-p);
            }
            if p > 1.0 {
                // remaining images on both sides, midpoint-corrected integral
                let edge = (shells as f64 + 0.5) * period;
                sum += ((edge - x).powf(1.0 - p) + (edge + x).powf(1.0 - p)) / ((p - 1.0) * period);
            }
        }
        _ => {
            for i in -shells..=shells {
                for j in -shells..=shells {
                    let a = x + i as f64 * period;
                    let b = j as f64 * period;
                    sum += (a * a + b * b).sqrt().powf(-p);
                }
            }
            if p > 2.0 {
                let edge = (shells as f64 + 0.5) * period;
                // area integral of r^{-p} outside the square, approximated by the disc
                let area = 2.0 * std::f64::consts::PI * edge.powf(2.0 - p) / (p - 2.0);
                sum += area / (period * period);
            }
        }
    }
    sum
}

/// Fit of `u(x) = C sum_k |x + 2kL|^{-p}` to the positive-axis samples of
/// `field` with `r_lo <= x <= r_hi`, minimising the log residual over `p`.
/// The returned law reports `exponent = -p` and `constant = C`.
pub fn periodized_tail_fit(field: &Field, r_lo: f64, r_hi: f64) -> Result<TailLaw> {
    let (radii, values) = field.positive_axis();
    let half = field.grid.half_length();
    periodized_fit_samples(field.grid.dim(), &radii, &values, half, r_lo, r_hi)
}

pub fn periodized_fit_samples(
    dim: usize,
    radii: &[f64],
    values: &[f64],
    half_length: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<TailLaw> {
    fit_samples(dim, radii, values, half_length, r_lo, r_hi, None)
}

/// Periodized fit with a subleading term:
/// `u(x) = C sum_k |x + 2kL|^{-p} + D sum_k |x + 2kL|^{-(p+q)}` with `q`
/// fixed. `C`, `D` are linear least-squares in relative error; `p` is
/// searched. The reported constant is `C`.
pub fn periodized_tail_fit_corrected(field: &Field, r_lo: f64, r_hi: f64, q: f64) -> Result<TailLaw> {
    if !(q > 0.0) {
        return Err(invalid("q", format!("correction exponent must be positive, got {q}")));
    }
    let (radii, values) = field.positive_axis();
    let half = field.grid.half_length();
    fit_samples(field.grid.dim(), &radii, &values, half, r_lo, r_hi, Some(q))
}

fn fit_samples(
    dim: usize,
    radii: &[f64],
    values: &[f64],
    half_length: f64,
    r_lo: f64,
    r_hi: f64,
    correction: Option<f64>,
) -> Result<TailLaw> {
    if !(r_lo >= 1.0 && r_hi > r_lo && r_hi < half_length * (1.0 + 1e-12)) {
        return Err(invalid(
            "window",
            format!("need 1 <= r_lo < r_hi <= L = {half_length}, got [{r_lo}, {r_hi}]"),
        ));
    }
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(&r, _)| r >= r_lo && r <= r_hi)
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in tail window [{r_lo}, {r_hi}], need 5",
            pts.len()
        )));
    }
    if pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(Error::InsufficientSamples(
            "tail window contains non-positive values (below the positivity floor?)".into(),
        ));
    }
    let logs: Vec<f64> = pts.iter().map(|&(_, v)| v.ln()).collect();
    let objective = |p: f64| -> (f64, f64, f64) {
        let lead: Vec<f64> = pts
            .iter()
            .map(|&(r, _)| periodic_power_sum(dim, r, half_length, p))
            .collect();
        let Some(q) = correction else {
            let ln_c = logs.iter().zip(&lead).map(|(a, b)| a - b.ln()).sum::<f64>() / logs.len() as f64;
            let mut ss = 0.0;
            let mut worst = 0.0_f64;
            for (a, b) in logs.iter().zip(&lead) {
                let d = a - b.ln() - ln_c;
                ss += d * d;
                worst = worst.max((d.exp() - 1.0).abs());
            }
            return (ss, ln_c, worst);
        };
        // relative least squares: minimise sum (1 - (C a + D b) / u)^2
        let sub: Vec<f64> = pts
            .iter()
            .map(|&(r, _)| periodic_power_sum(dim, r, half_length, p + q))
            .collect();
        let (mut aa, mut ab, mut bb, mut a1, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&(_, u), &a), &b) in pts.iter().zip(&lead).zip(&sub) {
            let (a, b) = (a / u, b / u);
            aa += a * a;
            ab += a * b;
            bb += b * b;
            a1 += a;
            b1 += b;
        }
        let det = aa * bb - ab * ab;
        let c = (a1 * bb - b1 * ab) / det;
        let d = (aa * b1 - ab * a1) / det;
        // the subleading term must stay a correction over the whole window
        if !(c > 0.0) || (d * sub[0]).abs() > MAX_CORRECTION * c * lead[0] {
            return (f64::INFINITY, f64::NAN, f64::INFINITY);
        }
        let mut ss = 0.0;
        let mut worst = 0.0_f64;
        for ((&(_, u), &a), &b) in pts.iter().zip(&lead).zip(&sub) {
            let e = (c * a + d * b) / u - 1.0;
            ss += e * e;
            worst = worst.max(e.abs());
        }
        (ss, c.max(f64::MIN_POSITIVE).ln(), worst)
    };
    // start from the plain log-log slope, then golden-section search
    let xs: Vec<f64> = pts.iter().map(|&(r, _)| r.ln()).collect();
    let (slope, _) = least_squares(&xs, &logs);
    let guess = (-slope).clamp(0.2, 8.0);
    let (mut a, mut b) = ((guess - 1.5).max(0.05), guess + 1.5);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c).0, objective(d).0);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d).0;
        }
    }
    let p = 0.5 * (a + b);
    let (ss, ln_c, worst) = objective(p);
    if !ss.is_finite() {
        return Err(Error::InsufficientSamples(format!(
            "no admissible two-term tail fit in [{r_lo}, {r_hi}]; window too close to the core"
        )));
    }
    Ok(TailLaw {
        exponent: -p,
        constant: ln_c.exp(),
        window: [r_lo, r_hi],
        residual: worst,
        expected_exponent: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn recovers_periodized_power_law() {
        let grid = Grid::new(1, 1024, 100.0).unwrap();
        for &p in &[5.0 / 3.0, 2.0, 3.0] {
            let u = Field::from_fn(grid, |[x, _]| 0.7 * periodic_power_sum(1, x.abs().max(0.5), 100.0, p));
            let law = periodized_tail_fit(&u, 5.0, 90.0).unwrap();
            assert!((law.exponent + p).abs() < 1e-5, "p = {p}: {}", law.exponent);
            assert!((law.constant / 0.7 - 1.0).abs() < 1e-5);
            assert!(law.residual < 1e-6);
        }
    }

    #[test]
    fn image_sum_tail_correction() {
        let k_max = 20000;
        let mut direct: f64 = (-k_max..=k_max).map(|k| (3.0 + 20.0 * k as f64).abs().powf(-2.0)).sum();
        direct += 2.0 / (400.0 * (k_max as f64 + 0.5));
        let fast = periodic_power_sum(1, 3.0, 10.0, 2.0);
        assert!((direct - fast).abs() < 1e-9, "{direct} vs {fast}");
    }
}

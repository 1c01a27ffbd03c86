//! Bessel functions of the first kind for the integer and half-integer
//! orders that radial Fourier transforms need.
//!
//! Small arguments use the power series, large arguments the Hankel
//! asymptotic expansion. Integer orders in between go through Miller's
//! backward recurrence; half-integer orders through the spherical Bessel
//! closed forms.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::special::gamma;

const SERIES_CUTOFF: f64 = 8.0;
const ASYMPTOTIC_CUTOFF: f64 = 25.0;

/// Order classification: `2 * order` must be an integer, and half-integer
/// orders must be at least `-1/2`.
fn check_order(order: f64) -> Result<()> {
    let twice = 2.0 * order;
    if twice.fract() != 0.0 || !order.is_finite() {
        return Err(invalid("order", format!("unsupported Bessel order {order}")));
    }
    if order.fract() != 0.0 && order < -0.5 {
        return Err(invalid("order", format!("unsupported Bessel order {order}")));
    }
    Ok(())
}

/// `J_order(z)` for `z >= 0` and `order` in `{-1/2, 0, 1/2, 1, 3/2, ...}`
/// (negative integers are accepted through `J_{-n} = (-1)^n J_n`).
pub fn bessel_j(order: f64, z: f64) -> Result<f64> {
    check_order(order)?;
    if !(z >= 0.0 && z.is_finite()) {
        return Err(invalid("z", format!("Bessel argument must be finite and >= 0, got {z}")));
    }
    Ok(bessel_j_unchecked(order, z))
}

pub(crate) fn bessel_j_unchecked(order: f64, z: f64) -> f64 {
    if order.fract() == 0.0 {
        let n = order as i64;
        if n < 0 {
            let v = integer_order(n.unsigned_abs() as usize, z);
            return if n % 2 == 0 { v } else { -v };
        }
        integer_order(n as usize, z)
    } else {
        half_integer_order(order, z)
    }
}

fn series(order: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if order == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    let q = -half * half;
    let mut term = half.powf(order) / gamma(order + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + order));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn hankel_asymptotic(order: f64, z: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        }
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        // P collects k = 0, 2, 4 with alternating signs; Q collects k = 1, 3, ...
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = z - (0.5 * order + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn integer_order(n: usize, z: f64) -> f64 {
    let nf = n as f64;
    if z <= SERIES_CUTOFF.max(nf) {
        return series(nf, z);
    }
    if z >= ASYMPTOTIC_CUTOFF.max(nf * nf) {
        return hankel_asymptotic(nf, z);
    }
    miller(n, z)
}

/// Backward recurrence normalised by `J_0 + 2 sum J_{2k} = 1`.
fn miller(n: usize, z: f64) -> f64 {
    let start = 2 * ((z.max(n as f64) as usize + 40) / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (0..=start).rev() {
        if k == n {
            wanted = cur;
        }
        norm += if k == 0 {
            cur
        } else if k % 2 == 0 {
            2.0 * cur
        } else {
            0.0
        };
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / z * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    wanted / norm
}

fn half_integer_order(order: f64, z: f64) -> f64 {
    // order = n + 1/2 with n >= -1
    let n = (order - 0.5).round() as i64;
    if z < 1.0 + (n.max(0) as f64) {
        return series(order, z);
    }
    if z >= ASYMPTOTIC_CUTOFF.max(order * order) {
        return hankel_asymptotic(order, z);
    }
    // spherical j_n by upward recurrence from j_{-1} = cos z / z, j_0 = sin z / z
    let mut jm = z.cos() / z;
    let mut j = z.sin() / z;
    if n == -1 {
        j = jm;
    } else {
        for k in 0..n {
            let jp = (2 * k + 1) as f64 / z * j - jm;
            jm = j;
            j = jp;
        }
    }
    (2.0 * z / PI).sqrt() * j
}

/// Derivative through `J'_nu = (nu/z) J_nu - J_{nu+1}`.
pub(crate) fn bessel_j_derivative(order: f64, z: f64) -> f64 {
    order / z * bessel_j_unchecked(order, z) - bessel_j_unchecked(order + 1.0, z)
}

/// The `k`-th positive zero of `J_order` (k >= 1), from McMahon's estimate
/// refined by Newton steps.
pub(crate) fn bessel_zero(order: f64, k: usize) -> f64 {
    if order == -0.5 {
        return (k as f64 - 0.5) * PI;
    }
    if order == 0.5 {
        return k as f64 * PI;
    }
    let b = (k as f64 + 0.5 * order - 0.25) * PI;
    let mu = 4.0 * order * order;
    let mut x = b - (mu - 1.0) / (8.0 * b) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * b).powi(3));
    for _ in 0..50 {
        let dx = bessel_j_unchecked(order, x) / bessel_j_derivative(order, x);
        x -= dx;
        if dx.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_closed_form() {
        let v = bessel_j(0.5, PI / 2.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-15);
        for &z in &[0.3, 1.7, 9.0, 31.0, 400.0] {
            let exact = (2.0 / (PI * z)).sqrt() * z.sin();
            assert!((bessel_j(0.5, z).unwrap() - exact).abs() < 1e-14, "{z}");
            let exact = (2.0 / (PI * z)).sqrt() * z.cos();
            assert!((bessel_j(-0.5, z).unwrap() - exact).abs() < 1e-14, "{z}");
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        // tabulated (Abramowitz & Stegun)
        let cases = [
            (0.0, 1.0, 0.765_197_686_557_966_6),
            (0.0, 10.0, -0.245_935_764_451_348_3),
            (1.0, 10.0, 0.043_472_746_168_861_44),
            (0.0, 30.0, -0.086_367_983_581_040_23),
            (2.0, 15.0, 0.041_571_677_975_250_48),
            (1.0, 2.5, 0.497_094_102_464_274_2),
        ];
        for (nu, z, want) in cases {
            let got = bessel_j(nu, z).unwrap();
            assert!((got - want).abs() < 1e-13, "J_{nu}({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn recurrence_residual() {
        let mu = 1.0;
        let mut z = 0.1;
        while z <= 50.0 {
            let lhs = bessel_j(mu - 1.0, z).unwrap() + bessel_j(mu + 1.0, z).unwrap();
            let rhs = 2.0 * mu / z * bessel_j(mu, z).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10, "z = {z}: {}", lhs - rhs);
            z += 0.05;
        }
    }

    #[test]
    fn unsupported_orders() {
        assert!(bessel_j(0.3, 1.0).is_err());
        assert!(bessel_j(-1.5, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
    }

    #[test]
    fn zeros() {
        let z1 = bessel_zero(0.0, 1);
        assert!((z1 - 2.404_825_557_695_773).abs() < 1e-12);
        let z = bessel_zero(1.0, 3);
        assert!((z - 10.173_468_135_062_722).abs() < 1e-11);
        for k in 1..50 {
            assert!(bessel_j_unchecked(0.0, bessel_zero(0.0, k)).abs() < 1e-13);
        }
    }
}

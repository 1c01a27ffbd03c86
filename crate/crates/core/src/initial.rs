//! Initial data builders.

use crate::error::{invalid, Result};
use crate::grid::{Field, Grid};

/// Smooth transition from 1 (at `z <= 0`) to 0 (at `z >= 1`), C-infinity.
pub fn smooth_step(z: f64) -> f64 {
    fn g(z: f64) -> f64 {
        if z > 0.0 {
            (-1.0 / z).exp()
        } else {
            0.0
        }
    }
    let a = g(1.0 - z);
    let b = g(z);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// `height` on `|x| <= r_in`, smoothly decaying to 0 at `|x| = r_out`.
pub fn smooth_plateau(grid: Grid, height: f64, r_in: f64, r_out: f64) -> Result<Field> {
    if !(r_out > r_in && r_in >= 0.0) {
        return Err(invalid("plateau", format!("need 0 <= r_in < r_out, got {r_in}, {r_out}")));
    }
    if r_out >= grid.half_length() {
        return Err(invalid("plateau", "support must fit inside the box"));
    }
    Ok(Field::from_radial(grid, |r| height * smooth_step((r - r_in) / (r_out - r_in))))
}

/// `amplitude * exp(-|x|^2 / width^2)`.
pub fn gaussian(grid: Grid, amplitude: f64, width: f64) -> Result<Field> {
    if !(width > 0.0) {
        return Err(invalid("width", format!("must be positive, got {width}")));
    }
    Ok(Field::from_radial(grid, |r| amplitude * (-(r / width).powi(2)).exp()))
}

/// `amplitude * min(1, |x|^{-p})`, the slowly decaying data of the
/// fast-diffusion spreading regime.
pub fn power_tail(grid: Grid, amplitude: f64, p: f64) -> Result<Field> {
    if !(p > 0.0) {
        return Err(invalid("p", format!("decay exponent must be positive, got {p}")));
    }
    Ok(Field::from_radial(grid, |r| amplitude * r.max(1.0).powf(-p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_shape() {
        let grid = Grid::new(1, 256, 4.0).unwrap();
        let u = smooth_plateau(grid, 1.5, 1.0, 2.0).unwrap();
        for (i, &v) in u.values.iter().enumerate() {
            let r = grid.radius(i);
            if r <= 1.0 {
                assert_eq!(v, 1.5);
            }
            if r >= 2.0 {
                assert_eq!(v, 0.0);
            }
            assert!((0.0..=1.5).contains(&v));
        }
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }
}

//! Uniform periodic grids on `[-L, L)^dim` and the spectral fractional
//! Laplacian.
//!
//! The operator is the Fourier multiplier `|xi|^{2s}` on the frequencies
//! `pi k / L`. The Nyquist mode carries a real coefficient for real fields,
//! so multiplying it by a real symbol keeps it cosine-only.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::special::{gamma, zeta};

pub const MIN_POINTS_PER_AXIS: usize = 16;
/// Upper bound on `points^dim` for [`oracle_fractional_laplacian_dense`].
pub const DENSE_ORACLE_CAP: usize = 256;
/// Number of periodic image shells summed by the dense oracle.
pub const DENSE_ORACLE_SHELLS: i64 = 5;
/// Tolerance above 1 accepted for solution fields.
pub const SOLUTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid("grid.dim", format!("evolution grids are 1D or 2D, got {dim}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS || !points_per_axis.is_power_of_two() {
            return Err(invalid(
                "grid.points",
                format!("need a power of two >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"),
            ));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid("grid.half_length", format!("must be positive, got {half_length}")));
        }
        Ok(Self {
            dim,
            points_per_axis,
            half_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of grid index `i` along one axis. Index `n/2` is the origin.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }

    /// Index of the origin along an axis.
    pub fn center_index(&self) -> usize {
        self.points_per_axis / 2
    }

    /// Cartesian position of flat index `idx` (row-major, first axis slowest).
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / n), self.coord(idx % n)],
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.position(idx);
        x.hypot(y)
    }

    /// Angular wavenumber `pi k / L` of FFT bin `j`, `k` in `[-n/2, n/2)`.
    /// The Nyquist bin reports `+pi n / (2L)`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points_per_axis;
        let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        std::f64::consts::PI * k / self.half_length
    }

    /// `|xi|^2` for every bin of the (row-major) spectrum.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        match self.dim {
            1 => (0..n).map(|j| self.wavenumber(j).powi(2)).collect(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for a in 0..n {
                    let ka = self.wavenumber(a).powi(2);
                    for b in 0..n {
                        out.push(ka + self.wavenumber(b).powi(2));
                    }
                }
                out
            }
        }
    }

    pub fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("grid.dim".into(), self.dim.to_string()),
            ("grid.points".into(), self.points_per_axis.to_string()),
            ("grid.half_length".into(), format!("{:.17}", self.half_length)),
        ]
    }
}

/// Gridded snapshot of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "field.values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    /// Samples a function of the position on the grid.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    /// Samples a radial function.
    pub fn from_radial(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |[x, y]| f(x.hypot(y)))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// Finite values in `[0, 1 + SOLUTION_TOL]`.
    pub fn check_solution_bounds(&self) -> Result<()> {
        self.check_finite()?;
        if let Some(index) = self
            .values
            .iter()
            .position(|&v| !(0.0..=1.0 + SOLUTION_TOL).contains(&v))
        {
            return Err(invalid(
                "field",
                format!("value {} at index {index} outside [0, 1]", self.values[index]),
            ));
        }
        Ok(())
    }

    /// Discrete integral `sum(u) h^dim`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid inner product `sum(u v) h^dim`.
    pub fn inner(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// Values along the positive first axis through the origin (1D: the
    /// right half-line including the origin).
    pub fn positive_axis(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.points_per_axis;
        let c = self.grid.center_index();
        let mut r = Vec::new();
        let mut v = Vec::new();
        for i in c..n {
            r.push(self.grid.coord(i));
            let idx = match self.grid.dim {
                1 => i,
                _ => c * n + i,
            };
            v.push(self.values[idx]);
        }
        (r, v)
    }

    /// Linear interpolation at a Cartesian point (periodic wrap).
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        let n = self.grid.points_per_axis;
        let h = self.grid.spacing();
        let locate = |xx: f64| {
            let t = (xx + self.grid.half_length) / h;
            let i0 = t.floor();
            let w = t - i0;
            let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
            (i0, (i0 + 1) % n, w)
        };
        match self.grid.dim {
            1 => {
                let (i0, i1, w) = locate(x[0]);
                (1.0 - w) * self.values[i0] + w * self.values[i1]
            }
            _ => {
                let (a0, a1, wa) = locate(x[0]);
                let (b0, b1, wb) = locate(x[1]);
                let v = |a: usize, b: usize| self.values[a * n + b];
                (1.0 - wa) * ((1.0 - wb) * v(a0, b0) + wb * v(a0, b1))
                    + wa * ((1.0 - wb) * v(a1, b0) + wb * v(a1, b1))
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(String, String)]) -> Result<()> {
        writeln!(w, "# frackpp-field v1")?;
        writeln!(w, "# dim={}", self.grid.dim)?;
        writeln!(w, "# points_per_axis={}", self.grid.points_per_axis)?;
        writeln!(w, "# half_length={:.17e}", self.grid.half_length)?;
        writeln!(w, "# time={:.17e}", self.time)?;
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        match self.grid.dim {
            1 => {
                writeln!(w, "x,value")?;
                for (i, v) in self.values.iter().enumerate() {
                    writeln!(w, "{:.17e},{:.17e}", self.grid.coord(i), v)?;
                }
            }
            _ => {
                writeln!(w, "x,y,value")?;
                for (i, v) in self.values.iter().enumerate() {
                    let [x, y] = self.grid.position(i);
                    writeln!(w, "{x:.17e},{y:.17e},{v:.17e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = None;
        let mut n = None;
        let mut half = None;
        let mut time = 0.0;
        let mut values = Vec::new();
        let bad = |msg: String| Error::Format(format!("field csv: {msg}"));
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    let v = v.trim();
                    match k.trim() {
                        "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                        "points_per_axis" => {
                            n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?)
                        }
                        "half_length" => half = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                        "time" => time = v.parse::<f64>().map_err(|e| bad(e.to_string()))?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with('x') {
                continue;
            }
            let last = line.rsplit(',').next().unwrap_or("");
            values.push(last.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?);
        }
        let grid = Grid::new(
            dim.ok_or_else(|| bad("missing dim".into()))?,
            n.ok_or_else(|| bad("missing points_per_axis".into()))?,
            half.ok_or_else(|| bad("missing half_length".into()))?,
        )?;
        Field::new(grid, values, time)
    }

    /// Little-endian binary layout: magic `FKPF`, u32 version, u32 dim,
    /// u32 points_per_axis, f64 half_length, f64 time, then the values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"FKPF")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis as u32).to_le_bytes())?;
        w.write_all(&self.grid.half_length.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"FKPF" {
            return Err(Error::Format("field binary: bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("field binary: unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let half = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let time = f64::from_le_bytes(f64buf);
        let grid = Grid::new(dim, n, half)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut f64buf)?;
            values.push(f64::from_le_bytes(f64buf));
        }
        Field::new(grid, values, time)
    }
}

/// FFT plans for one grid. Plans are immutable and can be shared between
/// threads; every transform allocates its own scratch.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k2: Arc<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points_per_axis();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k2: Arc::new(grid.wavenumber_sq()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `|xi|^2` per spectral bin.
    pub fn wavenumber_sq(&self) -> &[f64] {
        &self.k2
    }

    /// `|xi|^{2s}` per spectral bin (zero at the zero mode).
    pub fn symbol(&self, s: f64) -> Vec<f64> {
        self.k2.iter().map(|&k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) }).collect()
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis();
        match self.grid.dim() {
            1 => fft.process(data),
            _ => {
                for row in data.chunks_exact_mut(n) {
                    fft.process(row);
                }
                let mut col = vec![Complex64::default(); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    fft.process(&mut col);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform including the `1/len` normalisation; returns the
    /// real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real radial multiplier `symbol(|xi|^2)`.
    pub fn apply_multiplier(&self, values: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut hat = self.forward(values);
        for (c, &k2) in hat.iter_mut().zip(self.k2.iter()) {
            *c *= symbol(k2);
        }
        self.inverse(hat)
    }
}

/// The spectral operator `(-Delta)^s` on a fixed grid.
#[derive(Debug, Clone)]
pub struct FractionalLaplacian {
    spectral: Spectral,
    s: f64,
    symbol: Vec<f64>,
}

impl FractionalLaplacian {
    pub fn new(grid: Grid, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(invalid("s", format!("operator order must lie in (0, 1], got {s}")));
        }
        let spectral = Spectral::new(grid);
        let symbol = spectral.symbol(s);
        Ok(Self {
            spectral,
            s,
            symbol,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.grid != *self.spectral.grid() {
            return Err(invalid("field.grid", "field does not live on the operator's grid"));
        }
        u.check_finite()?;
        let mut hat = self.spectral.forward(&u.values);
        for (c, &sym) in hat.iter_mut().zip(&self.symbol) {
            *c *= sym;
        }
        Ok(Field {
            grid: u.grid,
            values: self.spectral.inverse(hat),
            time: u.time,
        })
    }
}

/// `(-Delta)^s u` through the Fourier multiplier `|xi|^{2s}`.
pub fn apply_fractional_laplacian(u: &Field, s: f64) -> Result<Field> {
    FractionalLaplacian::new(u.grid, s)?.apply(u)
}

/// Normalising constant of the singular-integral form of `(-Delta)^s`.
pub fn singular_integral_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    s * 4f64.powf(s) * gamma((n + 2.0 * s) / 2.0)
        / (std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s))
}

/// Dense principal-value quadrature of `(-Delta)^s u` summed over
/// [`DENSE_ORACLE_SHELLS`] periodic image shells.
///
/// Off-diagonal cells use the trapezoid sum. The missing self-cell is
/// restored with the leading lattice-sum correction (a zeta value in 1D, a
/// disc-equivalent cell in 2D) applied to the discrete Laplacian, and the
/// far field beyond the last shell is added in mean-field form.
pub fn oracle_fractional_laplacian_dense(u: &Field, s: f64) -> Result<Field> {
    let grid = u.grid;
    if grid.len() > DENSE_ORACLE_CAP {
        return Err(Error::GridTooLarge {
            points: grid.len(),
            cap: DENSE_ORACLE_CAP,
        });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("oracle needs s in (0, 1), got {s}")));
    }
    u.check_finite()?;
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let period = 2.0 * grid.half_length();
    let c = singular_integral_constant(dim, s);
    let vol = grid.cell_volume();
    let exponent = dim as f64 + 2.0 * s;
    let shells = DENSE_ORACLE_SHELLS;
    let mean = u.values.iter().sum::<f64>() / u.values.len() as f64;
    // Everything beyond the last shell, treated as mean-field.
    let far_radius = (2 * shells + 1) as f64 * grid.half_length();
    let far_weight = match dim {
        1 => 2.0 * far_radius.powf(-2.0 * s) / (2.0 * s),
        _ => 2.0 * std::f64::consts::PI * far_radius.powf(-2.0 * s) / (2.0 * s),
    };

    // Circulant weights sum_k |d + kP|^{-(N+2s)} over index offsets; the
    // half-period offset is split evenly between +L and -L so the table
    // stays symmetric.
    let offset_images = |o: usize| -> Vec<(f64, f64)> {
        let half = n / 2;
        if o < half {
            vec![(o as f64 * h, 1.0)]
        } else if o > half {
            vec![(o as f64 * h - period, 1.0)]
        } else {
            vec![(grid.half_length(), 0.5), (-grid.half_length(), 0.5)]
        }
    };
    let mut out = vec![0.0; grid.len()];
    match dim {
        1 => {
            // h sum_{j != 0} phi(jh)|jh|^a = integral + 2 zeta(-a) h^{1+a} phi(0)
            // with a = 1 - 2s and phi(0) = -u''/2
            let self_corr = zeta(2.0 * s - 1.0) * h.powf(2.0 - 2.0 * s);
            let weights: Vec<f64> = (0..n)
                .map(|o| {
                    let mut w = 0.0;
                    for (d0, wt) in offset_images(o) {
                        for k in -shells..=shells {
                            if o == 0 && k == 0 {
                                continue;
                            }
                            w += wt * (d0 + k as f64 * period).abs().powf(-exponent);
                        }
                    }
                    w
                })
                .collect();
            for (i, o) in out.iter_mut().enumerate() {
                let ui = u.values[i];
                let mut acc = 0.0;
                for (off, w) in weights.iter().enumerate() {
                    acc += w * (ui - u.values[(i + n - off) % n]);
                }
                acc *= vol;
                let lap = (u.values[(i + 1) % n] - 2.0 * ui + u.values[(i + n - 1) % n]) / (h * h);
                acc += self_corr * lap;
                acc += far_weight * (ui - mean);
                *o = c * acc;
            }
        }
        _ => {
            // disc of equal area to the omitted cell
            let rho = h / std::f64::consts::PI.sqrt();
            let self_corr = -(std::f64::consts::PI / 2.0) * rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            let mut weights = vec![0.0; n * n];
            for oa in 0..n {
                for ob in 0..n {
                    let mut w = 0.0;
                    for (da, wa) in offset_images(oa) {
                        for (db, wb) in offset_images(ob) {
                            for ka in -shells..=shells {
                                for kb in -shells..=shells {
                                    if oa == 0 && ob == 0 && ka == 0 && kb == 0 {
                                        continue;
                                    }
                                    let dx = da + ka as f64 * period;
                                    let dy = db + kb as f64 * period;
                                    w += wa * wb * (dx * dx + dy * dy).powf(-exponent / 2.0);
                                }
                            }
                        }
                    }
                    weights[oa * n + ob] = w;
                }
            }
            for (i, o) in out.iter_mut().enumerate() {
                let (a, b) = (i / n, i % n);
                let ui = u.values[i];
                let mut acc = 0.0;
                for oa in 0..n {
                    for ob in 0..n {
                        let j = ((a + n - oa) % n) * n + (b + n - ob) % n;
                        acc += weights[oa * n + ob] * (ui - u.values[j]);
                    }
                }
                acc *= vol;
                let at = |a: usize, b: usize| u.values[(a % n) * n + (b % n)];
                let lap = (at(a + 1, b) + at(a + n - 1, b) + at(a, b + 1) + at(a, b + n - 1) - 4.0 * ui)
                    / (h * h);
                acc += self_corr * lap;
                acc += far_weight * (ui - mean);
                *o = c * acc;
            }
        }
    }
    Ok(Field {
        grid,
        values: out,
        time: u.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 100, 1.0).is_err());
        assert!(Grid::new(1, 8, 1.0).is_err());
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(1, 16, 0.0).is_err());
    }

    #[test]
    fn constant_maps_to_zero() {
        let g = grid1(64, 5.0);
        let u = Field::from_fn(g, |_| 3.5);
        let lu = apply_fractional_laplacian(&u, 0.3).unwrap();
        assert!(lu.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = grid1(128, PI);
        for &s in &[0.25, 0.5, 0.9, 1.0] {
            let k = 3.0;
            let u = Field::from_fn(g, |[x, _]| (k * x).cos());
            let lu = apply_fractional_laplacian(&u, s).unwrap();
            let eig = k.powf(2.0 * s);
            for (a, b) in lu.values.iter().zip(&u.values) {
                assert!((a - eig * b).abs() < 1e-11, "s = {s}");
            }
        }
    }

    #[test]
    fn two_dimensional_mode() {
        let g = Grid::new(2, 32, PI).unwrap();
        let u = Field::from_fn(g, |[x, y]| (2.0 * x).cos() * (1.0 * y).sin());
        let lu = apply_fractional_laplacian(&u, 0.5).unwrap();
        let eig = 5f64.sqrt();
        for (a, b) in lu.values.iter().zip(&u.values) {
            assert!((a - eig * b).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid1(16, 1.0);
        let mut u = Field::zeros(g);
        u.values[3] = f64::NAN;
        assert!(matches!(
            apply_fractional_laplacian(&u, 0.5),
            Err(Error::NonFinite { index: 3 })
        ));
    }

    #[test]
    fn oracle_constant_and_cap() {
        let g = grid1(64, 4.0);
        let u = Field::from_fn(g, |_| 2.0);
        let lu = oracle_fractional_laplacian_dense(&u, 0.4).unwrap();
        assert!(lu.values.iter().all(|v| v.abs() < 1e-12));
        let big = Field::zeros(grid1(512, 4.0));
        assert!(matches!(
            oracle_fractional_laplacian_dense(&big, 0.5),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_preserves_antisymmetry() {
        let g = grid1(64, 6.0);
        let u = Field::from_fn(g, |[x, _]| x * (-x * x).exp());
        let lu = oracle_fractional_laplacian_dense(&u, 0.5).unwrap();
        let n = g.points_per_axis();
        // x_i = -x_{n-i}
        for i in 1..n {
            assert!((lu.values[i] + lu.values[n - i]).abs() < 1e-10, "{i} {} {}", lu.values[i], lu.values[n - i]);
        }
    }

    #[test]
    fn binary_and_csv_roundtrip() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let mut u = Field::from_fn(g, |[x, y]| (x - 0.3 * y).sin());
        u.time = 0.125;
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(Field::read_binary(buf.as_slice()).unwrap(), u);
        let mut csv = Vec::new();
        u.write_csv(&mut csv, &[("s".into(), "0.5".into())]).unwrap();
        let back = Field::read_csv(csv.as_slice()).unwrap();
        assert_eq!(back, u);
    }
}

//! Spectral `(-Delta)^s` on the periodic box against the dense
//! singular-integral oracle.

use frackpp::initial::gaussian;
use frackpp::{apply_fractional_laplacian, oracle_fractional_laplacian_dense, Grid};

fn main() -> frackpp::Result<()> {
    for (dim, n) in [(1, 256), (2, 16)] {
        let grid = Grid::new(dim, n, if dim == 1 { 8.0 } else { 6.0 })?;
        let u = gaussian(grid, 1.0, if dim == 1 { 1.0 } else { 2.0 })?;
        for s in [0.25, 0.5, 0.75] {
            let spectral = apply_fractional_laplacian(&u, s)?;
            let dense = oracle_fractional_laplacian_dense(&u, s)?;
            let scale = spectral.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let err = spectral
                .values
                .iter()
                .zip(&dense.values)
                .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
            println!("N = {dim}, s = {s}: max |spectral - dense| / max = {:.3e}", err / scale);
        }
    }
    Ok(())
}

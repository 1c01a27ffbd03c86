//! Small-time lower estimate `u(x, t) >= C t |x|^{-(N+2s)}` away from the
//! support of the data.

use frackpp::diffusion::{verify_lower_parabolic_estimate, StepperConfig};
use frackpp::heat_kernel::log_radii;
use frackpp::initial::smooth_plateau;
use frackpp::{Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    let grid = Grid::new(1, 4096, 50.0)?;
    let u0 = smooth_plateau(grid, 1.2, 1.0, 1.6)?;
    let cfg = StepperConfig {
        dt: 1e-4,
        ..Default::default()
    };
    for m in [0.75, 2.0] {
        let p = ModelParams::new(1, 0.5, m)?;
        let rep = verify_lower_parabolic_estimate(&u0, &p, &cfg, &log_radii(0.01, 0.1, 10), 5.0)?;
        println!(
            "m = {m}: spatial exponent {:.4}, A(t) ~ t^{:.4}, C* = {:.4}",
            rep.mean_spatial_exponent, rep.time_exponent, rep.c_star
        );
        for (t, a) in rep.times.iter().zip(&rep.prefactors) {
            println!("  t = {t:.4}  A/t = {:.5}", a / t);
        }
    }
    Ok(())
}

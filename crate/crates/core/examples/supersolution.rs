//! Upper power-law bound `K1 M e^{at} (tau + tau0)^{2 beta s} |x|^{-(N+2s)}`
//! for KPP data below a Barenblatt profile, checked on a linear-diffusion
//! run.

use frackpp::diffusion::{ProfileConstants, StepperConfig};
use frackpp::heat_kernel::{kernel_value, log_radii};
use frackpp::initial::gaussian;
use frackpp::kpp::{check_supersolution_bound, run_kpp, KppOptions};
use frackpp::{Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    let p = ModelParams::new(1, 0.5, 1.0)?.with_logistic(1.0)?;
    let mut radii = vec![0.0];
    radii.extend(log_radii(1e-2, 1e4, 200));
    let calib = ProfileConstants::from_kernel(p.s, p.dim, &radii)?;
    println!("K1 = {:.6}, K2 = {:.6}, F(0) = {:.6}", calib.k1, calib.k2, calib.f0);

    let grid = Grid::new(1, 4096, 400.0)?;
    let u0 = gaussian(grid, 0.1, 1.0)?;
    // data below M P(., tau0)
    let (mass, tau0) = (1.0, 1.0);
    let below = grid
        .axis()
        .iter()
        .zip(&u0.values)
        .all(|(&x, &v)| v <= mass * kernel_value(p.s, 1, x.abs()).unwrap());
    println!("u0 below M P(., tau0): {below}");

    let cfg = StepperConfig {
        dt: 0.01,
        t_end: 6.0,
        snapshot_times: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        ..Default::default()
    };
    let run = run_kpp(&u0, &p, &cfg, &KppOptions::default())?;
    let check = check_supersolution_bound(&run, mass, tau0, &calib, 2.0, 0.0)?;
    for (t, m) in check.times.iter().zip(&check.margins) {
        println!("  t = {t:.1}: min(bound - u) = {m:.3e}");
    }
    println!("min bound/u = {:.4}, holds = {}", check.min_ratio, check.holds);
    Ok(())
}

//! Fractional porous medium flow from Gaussian data: mass, max and min
//! along the run for a slow, a linear and a fast diffusion exponent.

use frackpp::diffusion::{run_fpme, StepperConfig};
use frackpp::initial::gaussian;
use frackpp::{Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    let grid = Grid::new(1, 1024, 50.0)?;
    let u0 = gaussian(grid, 1.0, 1.0)?;
    let cfg = StepperConfig {
        dt: 1e-3,
        t_end: 1.0,
        snapshot_times: vec![0.25, 0.5, 0.75],
        ..Default::default()
    };
    for m in [0.75, 1.0, 2.0] {
        let p = ModelParams::new(1, 0.5, m)?;
        let trace = run_fpme(&u0, &p, &cfg)?;
        println!("m = {m}: {} steps, mass drift {:.2e}", trace.steps, trace.mass_drift());
        for u in &trace.snapshots {
            println!("  t = {:.2}  mass {:.12}  max {:.6}  min {:.3e}", u.time, u.mass(), u.max(), u.min());
        }
    }
    Ok(())
}

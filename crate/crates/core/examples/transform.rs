//! The linearised problem `u_t + (-Delta)^s u^m = a u` against the pure
//! flow in rescaled time: `e^{-at} u(t) = v(tau(t))`.

use frackpp::diffusion::StepperConfig;
use frackpp::initial::gaussian;
use frackpp::kpp::{tau_rescale, transform_consistency};
use frackpp::{Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    println!("tau(ln 2) for m = 2, a = 1: {}", tau_rescale(2f64.ln(), 2.0, 1.0));
    let grid = Grid::new(1, 512, 20.0)?;
    let u0 = gaussian(grid, 0.5, 1.0)?;
    let cfg = StepperConfig {
        dt: 1e-3,
        ..Default::default()
    };
    for m in [0.75, 1.0, 2.0] {
        let p = ModelParams::new(1, 0.5, m)?.with_logistic(1.0)?;
        let rep = transform_consistency(&u0, &p, &cfg, &[0.25, 0.5, 0.75, 1.0])?;
        println!("m = {m}:");
        for ((t, tau), e) in rep.times.iter().zip(&rep.taus).zip(&rep.errors) {
            println!("  t = {t:.2}  tau = {tau:.6}  max error {e:.2e}");
        }
    }
    Ok(())
}

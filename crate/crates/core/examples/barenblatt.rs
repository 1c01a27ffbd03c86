//! Barenblatt solution from a point mass: self-similar collapse and the
//! power tail of the profile.
//!
//! cargo run --release --example barenblatt -- 2

use frackpp::diffusion::{barenblatt_run, BarenblattConfig, StepperConfig};
use frackpp::{Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    let m: f64 = std::env::args().nth(1).map_or(2.0, |a| a.parse().expect("m"));
    let (half, dt, t_end) = if m >= 1.0 { (2000.0, 0.02, 400.0) } else { (3000.0, 0.01, 80.0) };
    let p = ModelParams::new(1, 0.5, m)?;
    let grid = Grid::new(1, 4096, half)?;
    let cfg = BarenblattConfig::new(
        grid,
        StepperConfig {
            dt,
            t_end,
            ..Default::default()
        },
    );
    let run = barenblatt_run(1.0, &p, &cfg)?;
    println!("m = {m} ({:?}): alpha = {:.5}, beta = {:.5}", run.regime, run.alpha, run.beta);
    for (ta, tb, d) in &run.discrepancies {
        println!("  collapse t = {ta:>7.1} -> {tb:>7.1}: {d:.3e}");
    }
    println!(
        "tail: F ~ {:.5} eta^{:.5} (expected exponent {:.5}, model {:?})",
        run.tail.constant, run.tail.exponent, run.expected_tail_exponent, run.tail_model
    );
    println!("profile samples:");
    for eta in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        println!("  F({eta:>4}) = {:.6e}", run.profile.interpolate(eta));
    }
    Ok(())
}

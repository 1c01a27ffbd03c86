//! Self-similar solution of the linear fractional heat equation with
//! growing data `|x|^gamma`: the profile `F`, its tail `F ~ eta^gamma`,
//! and the match with an evolved truncated power.
//!
//! cargo run --release --example selfsim_profile -- 0.5 0.5

use frackpp::diffusion::StepperConfig;
use frackpp::selfsim::{profile_derivative_bound, profile_etas, selfsim_evolution_check, selfsim_profile};
use frackpp::Grid;

fn main() -> frackpp::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let gamma = args.first().copied().unwrap_or(0.5);
    let s = args.get(1).copied().unwrap_or(0.5);

    let etas = profile_etas(1e-2, 1e3, 200);
    let profile = selfsim_profile(gamma, s, 1, &etas)?;
    let rep = profile_derivative_bound(&profile, gamma)?;
    for i in (0..profile.len()).step_by(25) {
        println!(
            "  eta = {:>10.4e}  F = {:>14.8e}  F/eta^gamma = {:.6}",
            profile.radii[i], profile.values[i], rep.tail_ratio[i]
        );
    }
    println!(
        "tail flatness on [{:.0}, {:.0}]: {:.3e}; |gamma F - eta F'|/eta^gamma <= {:.4}; monotone violations {}",
        rep.window[0], rep.window[1], rep.tail_flatness, rep.deriv_bound, rep.monotone_violations
    );

    let grid = Grid::new(1, 1 << 19, 10000.0)?;
    let cfg = StepperConfig {
        dt: 0.25,
        t_end: 1.0,
        ..Default::default()
    };
    let ev = selfsim_evolution_check(gamma, s, grid, &cfg)?;
    println!(
        "evolution: profile errors {:?}, collapse {:.2e}, U(0,t) ~ t^{:.4} (gap {:.2e})",
        ev.profile_errors, ev.collapse, ev.growth_exponent, ev.growth_gap
    );
    Ok(())
}

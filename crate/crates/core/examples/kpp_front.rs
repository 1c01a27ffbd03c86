//! Fisher-KPP front with fractional porous-medium diffusion: level-set
//! radii and the fitted exponential spreading rate against the critical
//! speed for each regime.
//!
//! cargo run --release --example kpp_front -- 0.75 strang

use frackpp::diffusion::StepperConfig;
use frackpp::experiment::rate_check;
use frackpp::front::{default_fit_window, fit_rate};
use frackpp::initial::{power_tail, smooth_plateau};
use frackpp::kpp::{run_kpp, KppOptions, Splitting};
use frackpp::{classify_regime, critical_exponents, Grid, ModelParams, Regime};

fn main() -> frackpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: f64 = args.first().map_or(0.75, |a| a.parse().expect("m"));
    let splitting: Splitting = args.get(1).map_or(Ok(Splitting::Lie), |a| a.parse())?;
    let p = ModelParams::new(1, 0.5, m)?.with_logistic(1.0)?;
    let regime = classify_regime(&p)?;
    let half = if regime == Regime::R1 { 8192.0 } else { 4096.0 };
    let grid = Grid::new(1, 8192, half)?;
    let u0 = match regime {
        Regime::R1 => power_tail(grid, 1.0, 2.0 * p.s / (1.0 - m))?,
        _ => smooth_plateau(grid, 1.0, 1.0, 2.0)?,
    };
    let cfg = StepperConfig {
        dt: 0.01,
        t_end: 15.0,
        snapshot_times: (1..=60).map(|k| 0.25 * k as f64).collect(),
        ..Default::default()
    };
    let opts = KppOptions {
        splitting,
        level_targets: vec![0.1, 0.5, 0.9],
    };
    let run = run_kpp(&u0, &p, &cfg, &opts)?;
    let ex = critical_exponents(&p)?;
    println!("m = {m} ({}), {splitting:?} splitting, {} steps", regime.label(), run.trace.steps);
    println!("sigma1 = {:?}, sigma2 = {:.4}, sigma3 = {:?}", ex.sigma1, ex.sigma2, ex.sigma3);
    for (k, t) in run.snapshot_times.iter().enumerate().filter(|(k, _)| k % 8 == 7) {
        let r: Vec<String> = run.level_radii.iter().map(|rs| format!("{:>10.3}", rs[k])).collect();
        println!("  t = {t:>5.2}  R_0.1 R_0.5 R_0.9 = {}", r.join(" "));
    }
    for &l in &opts.level_targets {
        let fit = fit_rate(&run, l, default_fit_window(&run, l)?, None)?;
        println!(
            "level {l}: rate {:.4} on [{:.2}, {:.2}] ({} points, residual {:.2e}); {}",
            fit.rate,
            fit.window[0],
            fit.window[1],
            fit.points,
            fit.residual,
            if rate_check(&p, fit.rate)?.passed { "within regime tolerance" } else { "outside regime tolerance" }
        );
    }
    println!("max clamp overshoot {:.2e}", run.max_overshoot);
    Ok(())
}

//! Ball minima `min_{|x| <= e^{sigma t}} u` for a KPP run: the solution
//! stays above a positive floor on balls growing at half the critical rate.

use frackpp::diffusion::StepperConfig;
use frackpp::front::positivity_floor_check;
use frackpp::initial::smooth_plateau;
use frackpp::kpp::{run_kpp, KppOptions};
use frackpp::{critical_exponents, Grid, ModelParams};

fn main() -> frackpp::Result<()> {
    let p = ModelParams::new(1, 0.5, 1.0)?.with_logistic(1.0)?;
    let grid = Grid::new(1, 8192, 4096.0)?;
    let u0 = smooth_plateau(grid, 1.0, 1.0, 2.0)?;
    let cfg = StepperConfig {
        dt: 0.01,
        t_end: 15.0,
        snapshot_times: (1..=15).map(f64::from).collect(),
        ..Default::default()
    };
    let run = run_kpp(&u0, &p, &cfg, &KppOptions::default())?;
    let sigma = 0.5 * critical_exponents(&p)?.sigma2;
    let rep = positivity_floor_check(&run, sigma, 0.5);
    for (t, v) in &rep.ball_minima {
        println!("  t = {t:>4.1}  radius {:>8.2}  min u = {v:.6}", (sigma * t).exp());
    }
    println!("floor 0.5 holds from t = {:?} with min {:?}", rep.t_lower, rep.eps_found);
    Ok(())
}

//! Pure-reaction level sets `R_lambda(t)` for Gaussian and power-law
//! tails: linear growth of `R^2` against exponential growth of `R`.

use frackpp::front::{reaction_only_levels, ReactionTail};
use frackpp::ModelParams;

fn main() -> frackpp::Result<()> {
    let p = ModelParams::new(1, 0.5, 1.0)?.with_logistic(1.0)?;
    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let gauss = reaction_only_levels(ReactionTail::Gaussian, &p, 0.5, &times)?;
    let power = reaction_only_levels(ReactionTail::Power, &p, 0.5, &times)?;
    println!("{:>4} {:>12} {:>14}", "t", "R gaussian", "R power");
    for (t, (g, w)) in times.iter().zip(gauss.iter().zip(&power)) {
        println!("{t:>4} {g:>12.6} {w:>14.6}");
    }
    let n = times.len() - 1;
    println!("d(R^2)/dt gaussian = {:.6}", (gauss[n].powi(2) - gauss[0].powi(2)) / times[n]);
    println!("d(ln R)/dt power    = {:.6}", (power[n].ln() - power[0].ln()) / times[n]);
    Ok(())
}

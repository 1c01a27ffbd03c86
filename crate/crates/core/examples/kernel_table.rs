//! Tabulates the fractional heat kernel profile `P(r) = P(r, 1)` and its
//! power tail, and compares with the closed form at `s = 1/2`.
//!
//! cargo run --release --example kernel_table -- 0.5 1

use frackpp::experiment::closed_form_kernel;
use frackpp::heat_kernel::{asymptotic_constant, derivative_tail_check, heat_kernel, kernel_profile, log_radii, tail_fit};

fn main() -> frackpp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let s: f64 = args.first().map_or(0.5, |a| a.parse().expect("s"));
    let dim: usize = args.get(1).map_or(1, |a| a.parse().expect("dim"));
    let q = dim as f64 + 2.0 * s;

    let mut radii = vec![0.0];
    radii.extend(log_radii(1e-2, 1e5, 141));
    let profile = kernel_profile(s, dim, &radii)?;
    let c1 = asymptotic_constant(dim, s)?;
    let closed = closed_form_kernel(s, dim);

    println!("{:>12} {:>22} {:>14} {:>12}", "r", "P(r)", "P r^q / C1", "closed err");
    for (i, (&r, &v)) in radii.iter().zip(&profile.values).enumerate() {
        if i % 10 != 0 {
            continue;
        }
        let err = closed.map_or(f64::NAN, |f| (v - f(r)).abs() / f(r));
        println!("{r:>12.4e} {v:>22.15e} {:>14.8} {err:>12.2e}", v * r.powf(q) / c1);
    }

    let law = tail_fit(&profile, -q)?;
    println!("\ntail: P ~ {:.8} r^{:.6}   (C1 = {c1:.8}, -q = {})", law.constant, law.exponent, -q);
    let d = derivative_tail_check(s, dim, &log_radii(1e2, 1e5, 31))?;
    println!(
        "N P + r dP/dr ~ {:.8} r^{:.6}   (predicted {:.8})",
        d.law.constant, d.law.exponent, d.predicted_constant
    );
    println!("unit mass: {:.8}", profile.radial_mass()?);

    // self-similarity P(x, t) = t^{-N/2s} P(x t^{-1/2s}, 1)
    let (x, t) = (3.0, 7.0);
    let lhs = heat_kernel(s, dim, x, t)?;
    let rhs = t.powf(-(dim as f64) / (2.0 * s)) * heat_kernel(s, dim, x * t.powf(-1.0 / (2.0 * s)), 1.0)?;
    println!("scaling at x = {x}, t = {t}: {lhs:.15e} vs {rhs:.15e}");
    Ok(())
}

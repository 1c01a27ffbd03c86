//! Positivity certificate for speeds below `sigma_2`: the time `t0`, the
//! threshold `eps0` and the ratios `L_k` along the radius sequence.
//!
//! cargo run --release --example certificate -- 2

use frackpp::critical_exponents;
use frackpp::experiment::{calibrate, Config};
use frackpp::front::certificate_run;
use frackpp::ModelParams;

fn main() -> frackpp::Result<()> {
    let m: f64 = std::env::args().nth(1).map_or(1.0, |a| a.parse().expect("m"));
    let p = ModelParams::new(1, 0.5, m)?.with_logistic(1.0)?;
    let profile = calibrate(&p, &Config::default())?;
    println!(
        "unit-mass profile: F(0) = {:.5}, K1 = {:.5}, K2 = {:.5}",
        profile.f0, profile.k1, profile.k2
    );
    let sigma2 = critical_exponents(&p)?.sigma2;
    for frac in [0.25, 0.5, 0.75] {
        let st = certificate_run(&p, frac * sigma2, 1e-6, 2.0, 20, &profile)?;
        println!(
            "sigma = {:.4}: delta = {:.4}, t0 = {:.4}, tau0 = {:.4}, eps0 = {:.3e}, accepted = {}",
            st.sigma, st.delta, st.t0, st.tau0, st.eps0, st.accepted
        );
        println!(
            "  L_0 = {:.6}, L_19 = {:.6}, L_inf = {:.6}, e^(sigma t0) = {:.6}",
            st.ratios[0],
            st.ratios[st.ratios.len() - 1],
            st.l_inf,
            (st.sigma * st.t0).exp()
        );
    }
    Ok(())
}

//! Barenblatt exponents, critical speeds and regime for a sweep of `m`.
//!
//! cargo run --example regimes -- 1 0.5

use frackpp::{classify_regime, critical_exponents, ModelParams};

fn main() -> frackpp::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (dim, s) = match args.as_slice() {
        [d, s, ..] => (*d as usize, *s),
        _ => (1, 0.5),
    };
    let probe = ModelParams::new(dim, s, 1.0)?;
    println!("N = {dim}, s = {s}: m_c = {:.4}, m_1 = {:.4}", probe.m_c(), probe.m1());
    println!("{:>6} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9}", "m", "regime", "alpha", "beta", "sigma1", "sigma2", "sigma3");
    for m in [0.3, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0, 1.5, 2.0, 3.0] {
        let p = ModelParams::new(dim, s, m)?.with_logistic(1.0)?;
        let (Ok(ex), Ok(regime)) = (critical_exponents(&p), classify_regime(&p)) else {
            println!("{m:>6} borderline or outside the admissible range");
            continue;
        };
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.5}"));
        println!(
            "{m:>6} {:>6} {:>9.5} {:>9.5} {:>9} {:>9.5} {:>9}",
            regime.label(),
            ex.alpha,
            ex.beta,
            opt(ex.sigma1),
            ex.sigma2,
            opt(ex.sigma3)
        );
    }
    Ok(())
}

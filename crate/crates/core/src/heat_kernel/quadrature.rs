use std::f64::consts::PI;
use std::sync::OnceLock;

pub(crate) const GL_POINTS: usize = 24;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_POINTS))
}

/// Fixed-order Gauss-Legendre on `[a, b]`.
pub(crate) fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integral over `[a, b]` on panels that shrink geometrically towards `a`,
/// for integrands with a weak singularity in some derivative at `a`.
pub(crate) fn integrate_graded(a: f64, b: f64, levels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = a + 0.5 * (hi - a);
        total += integrate(lo, hi, &f);
        hi = lo;
    }
    total + integrate(a, hi, &f)
}

/// Repeated neighbour averaging of the trailing partial sums of an
/// alternating series (Euler transform of the tail).
pub(crate) fn averaged_limit(partial: &[f64], depth: usize) -> Option<f64> {
    if partial.len() <= depth {
        return None;
    }
    let mut buf = partial[partial.len() - depth - 1..].to_vec();
    while buf.len() > 1 {
        for i in 0..buf.len() - 1 {
            buf[i] = 0.5 * (buf[i] + buf[i + 1]);
        }
        buf.pop();
    }
    Some(buf[0])
}

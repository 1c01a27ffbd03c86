//! Problem definition and the derived exponents.
//!
//! Everything in this module is a pure function of `(N, s, m)` and, for the
//! spreading speeds, of `f'(0)`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Step used for centred finite-difference slopes of custom reactions.
pub const REACTION_FD_STEP: f64 = 1e-6;
/// Number of grid points used to spot-check concavity of a reaction.
pub const CONCAVITY_SAMPLES: usize = 101;
const REACTION_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReactionKind {
    Logistic,
    CustomConcave,
}

/// A KPP reaction term `f` on `[0, 1]`.
#[derive(Clone)]
pub struct ReactionSpec {
    kind: ReactionKind,
    name: String,
    fprime0: f64,
    fprime1: f64,
    /// Growth rate of the logistic family `a u (1 - u)`.
    logistic_rate: Option<f64>,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ReactionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionSpec")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("fprime0", &self.fprime0)
            .field("fprime1", &self.fprime1)
            .finish()
    }
}

impl Serialize for ReactionSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("ReactionSpec", 4)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("fprime0", &self.fprime0)?;
        st.serialize_field("fprime1", &self.fprime1)?;
        st.end()
    }
}

impl ReactionSpec {
    /// `f(u) = a u (1 - u)`, so that `f'(0) = a` and `f'(1) = -a`.
    pub fn logistic(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("fprime0", format!("logistic rate must be positive, got {a}")));
        }
        Ok(Self {
            kind: ReactionKind::Logistic,
            name: "logistic".into(),
            fprime0: a,
            fprime1: -a,
            logistic_rate: Some(a),
            func: Arc::new(move |u| a * u * (1.0 - u)),
        })
    }

    /// A user supplied concave reaction. Slopes at 0 and 1 are taken by
    /// centred differences and the KPP structure is spot-checked.
    pub fn custom<F>(name: impl Into<String>, func: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let h = REACTION_FD_STEP;
        let fprime0 = (func(h) - func(-h)) / (2.0 * h);
        let fprime1 = (func(1.0 + h) - func(1.0 - h)) / (2.0 * h);
        let spec = Self {
            kind: ReactionKind::CustomConcave,
            name: name.into(),
            fprime0,
            fprime1,
            logistic_rate: None,
            func: Arc::new(func),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `f(u) = a u (1 - u)(1 - u/2)`: concave on `[0, 1]` with `f'(0) = a`
    /// but a different shape than the logistic term.
    pub fn damped_logistic(a: f64) -> Result<Self> {
        Self::custom("damped-logistic", move |u| a * u * (1.0 - u) * (1.0 - 0.5 * u))
    }

    pub fn kind(&self) -> ReactionKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fprime0(&self) -> f64 {
        self.fprime0
    }

    pub fn fprime1(&self) -> f64 {
        self.fprime1
    }

    pub fn logistic_rate(&self) -> Option<f64> {
        self.logistic_rate
    }

    #[inline]
    pub fn evaluate(&self, u: f64) -> f64 {
        (self.func)(u)
    }

    /// Checks `f(0) = f(1) = 0`, `f'(1) < 0 < f'(0)` and chord-slope concavity.
    pub fn validate(&self) -> Result<()> {
        let f0 = self.evaluate(0.0);
        let f1 = self.evaluate(1.0);
        if f0.abs() > REACTION_ZERO_TOL || f1.abs() > REACTION_ZERO_TOL {
            return Err(Error::InvalidReaction(format!(
                "f(0) = f(1) = 0 (got f(0) = {f0:e}, f(1) = {f1:e})"
            )));
        }
        if !(self.fprime0 > 0.0 && self.fprime1 < 0.0) {
            return Err(Error::InvalidReaction(format!(
                "f'(1) < 0 < f'(0) (got f'(0) = {}, f'(1) = {})",
                self.fprime0, self.fprime1
            )));
        }
        let n = CONCAVITY_SAMPLES - 1;
        let values: Vec<f64> = (0..=n).map(|i| self.evaluate(i as f64 / n as f64)).collect();
        let du = 1.0 / n as f64;
        let mut prev_slope = f64::INFINITY;
        for (i, w) in values.windows(2).enumerate() {
            let slope = (w[1] - w[0]) / du;
            if slope > prev_slope + 1e-9 * (1.0 + prev_slope.abs()) {
                return Err(Error::InvalidReaction(format!(
                    "concavity (chord slope increases near u = {})",
                    i as f64 * du
                )));
            }
            prev_slope = slope;
        }
        Ok(())
    }
}

/// `(N, s, m)` plus an optional reaction term.
#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    pub dim: usize,
    pub s: f64,
    pub m: f64,
    pub reaction: Option<ReactionSpec>,
}

impl ModelParams {
    pub fn new(dim: usize, s: f64, m: f64) -> Result<Self> {
        let p = Self {
            dim,
            s,
            m,
            reaction: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_reaction(mut self, reaction: ReactionSpec) -> Self {
        self.reaction = Some(reaction);
        self
    }

    pub fn with_logistic(self, a: f64) -> Result<Self> {
        Ok(self.with_reaction(ReactionSpec::logistic(a)?))
    }

    pub fn m_c(&self) -> f64 {
        m_c(self.dim, self.s)
    }

    pub fn m1(&self) -> f64 {
        m1(self.dim, self.s)
    }

    /// `f'(0)`, or 1 for pure diffusion.
    pub fn fprime0(&self) -> f64 {
        self.reaction.as_ref().map_or(1.0, |r| r.fprime0())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("s must lie in (0, 1), got {}", self.s)));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid("m", format!("m must be positive, got {}", self.m)));
        }
        let mc = self.m_c();
        if self.m <= mc {
            return Err(Error::ExtinctionRange { m: self.m, m_c: mc });
        }
        if let Some(r) = &self.reaction {
            r.validate()?;
        }
        Ok(())
    }

    /// Key/value pairs echoed into output metadata.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("dim".to_string(), self.dim.to_string()),
            ("s".to_string(), format!("{:.17}", self.s)),
            ("m".to_string(), format!("{:.17}", self.m)),
        ];
        match &self.reaction {
            Some(r) => {
                out.push(("reaction".into(), r.name().to_string()));
                out.push(("fprime0".into(), format!("{:.17}", r.fprime0())));
            }
            None => out.push(("reaction".into(), "none".into())),
        }
        out
    }
}

/// `m_c = (N - 2s)_+ / N`.
pub fn m_c(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    (n - 2.0 * s).max(0.0) / n
}

/// `m_1 = N / (N + 2s)`.
pub fn m1(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    n / (n + 2.0 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalExponents {
    pub m_c: f64,
    pub m1: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Only for `m < 1`.
    pub sigma1: Option<f64>,
    pub sigma2: f64,
    /// Only for `m > 1`.
    pub sigma3: Option<f64>,
    /// `1/[2s - N(1-m)]`, only for `m < 1`.
    pub theta: Option<f64>,
}

/// Barenblatt exponents and critical spreading speeds. Speeds scale with
/// `f'(0)` (taken as 1 when no reaction is attached).
pub fn critical_exponents(p: &ModelParams) -> Result<CriticalExponents> {
    p.validate()?;
    let n = p.dim as f64;
    let (s, m) = (p.s, p.m);
    let a = p.fprime0();
    let beta = 1.0 / (n * (m - 1.0) + 2.0 * s);
    let alpha = n * beta;
    let sigma1 = (m < 1.0).then(|| (1.0 - m) / (2.0 * s) * a);
    let sigma2 = a / (n + 2.0 * s);
    let sigma3 = (m > 1.0).then(|| (1.0 + 2.0 * (m - 1.0) * beta * s) / (n + 2.0 * s) * a);
    let theta = (m < 1.0).then(|| 1.0 / (2.0 * s - n * (1.0 - m)));
    Ok(CriticalExponents {
        m_c: p.m_c(),
        m1: p.m1(),
        alpha,
        beta,
        sigma1,
        sigma2,
        sigma3,
        theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Fast diffusion below `m_1`.
    R1,
    /// `m_1 < m <= 1`.
    R2,
    /// Slow diffusion.
    R3,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::R1 => "R1",
            Regime::R2 => "R2",
            Regime::R3 => "R3",
        }
    }
}

const BORDERLINE_TOL: f64 = 1e-12;

pub fn classify_regime(p: &ModelParams) -> Result<Regime> {
    if !(p.s > 0.0 && p.s < 1.0) {
        return Err(invalid("s", format!("s must lie in (0, 1), got {}", p.s)));
    }
    let mc = p.m_c();
    if p.m <= mc {
        return Err(Error::ExtinctionRange { m: p.m, m_c: mc });
    }
    let m1 = p.m1();
    if (p.m - m1).abs() <= BORDERLINE_TOL * m1.max(1.0) {
        return Err(Error::BorderlineExponent { m: p.m });
    }
    Ok(if p.m < m1 {
        Regime::R1
    } else if p.m <= 1.0 {
        Regime::R2
    } else {
        Regime::R3
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_half_laplacian_exponents() {
        let p = ModelParams::new(1, 0.5, 1.0).unwrap().with_logistic(1.0).unwrap();
        let e = critical_exponents(&p).unwrap();
        assert!(close(e.sigma2, 0.5, 1e-15));
        assert!(close(e.beta, 1.0, 1e-15));
        assert!(e.sigma1.is_none());
        assert!(e.sigma3.is_none());
    }

    #[test]
    fn slow_diffusion_sigma3() {
        let p = ModelParams::new(1, 0.5, 2.0).unwrap().with_logistic(1.0).unwrap();
        let e = critical_exponents(&p).unwrap();
        assert!(close(e.beta, 0.5, 1e-15));
        assert!(close(e.alpha, 0.5, 1e-15));
        assert!(close(e.sigma3.unwrap(), 0.75, 1e-15));
        assert!(e.sigma1.is_none());
        assert!(e.theta.is_none());
    }

    #[test]
    fn sigma1_meets_sigma2_at_m1() {
        for (dim, s) in [(1, 0.5), (2, 0.3), (3, 0.8)] {
            let m = m1(dim, s);
            let p = ModelParams::new(dim, s, m).unwrap();
            let e = critical_exponents(&p).unwrap();
            assert!(close(e.sigma1.unwrap(), e.sigma2, 1e-14), "{dim} {s}");
        }
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(matches!(
            ModelParams::new(1, 1.5, 1.0),
            Err(Error::InvalidParameter { ref key, .. }) if key == "s"
        ));
        assert!(matches!(
            ModelParams::new(3, 0.5, 0.5),
            Err(Error::ExtinctionRange { .. })
        ));
        assert!(ModelParams::new(3, 0.5, 0.67).is_ok());
    }

    #[test]
    fn regimes() {
        let r = |m| classify_regime(&ModelParams::new(1, 0.5, m).unwrap());
        assert_eq!(r(0.4).unwrap(), Regime::R1);
        assert_eq!(r(1.0).unwrap(), Regime::R2);
        assert_eq!(r(0.75).unwrap(), Regime::R2);
        assert_eq!(r(3.0).unwrap(), Regime::R3);
        assert!(matches!(r(0.5), Err(Error::BorderlineExponent { .. })));
    }

    #[test]
    fn reaction_checks() {
        let r = ReactionSpec::damped_logistic(1.0).unwrap();
        assert!(close(r.fprime0(), 1.0, 1e-8));
        assert!(close(r.fprime1(), -0.5, 1e-8));
        assert!(ReactionSpec::custom("bistable", |u| u * (1.0 - u) * (u - 0.3)).is_err());
        assert!(ReactionSpec::custom("offset", |u| u * (1.0 - u) + 0.1).is_err());
        // convex in u: chord slopes increase
        assert!(ReactionSpec::custom("convex", |u| u * (1.0 - u) * (1.0 + 3.0 * u * u)).is_err());
    }
}

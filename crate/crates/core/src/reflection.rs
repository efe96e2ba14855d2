//! Reflection laws `f : (-π/2, π/2) → (-π/2, π/2)` with `f(0) = 0` and
//! contraction bound `λ(f) = sup|f'| < 1` (the slap law `f ≡ 0` included).
//!
//! Built-in laws carry exact derivative and bound; user laws supply both and
//! are verified on a Chebyshev-node grid at construction, since a supremum
//! over an open interval is not machine-decidable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TOL_GEOM;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;
/// Grid size for verifying user-supplied laws and estimating seminorms.
const GRID: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("sigma must satisfy 0 < sigma < 1, got {0}")]
    SigmaOutOfRange(f64),
    #[error("law violates f(0) = 0: f(0) = {0}")]
    NonzeroAtOrigin(f64),
    #[error("|f'({theta})| = {observed} exceeds the declared bound {declared}")]
    LambdaBoundViolated {
        theta: f64,
        observed: f64,
        declared: f64,
    },
}

type LawFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum LawKind {
    /// f(θ) = σθ
    Linear { sigma: f64 },
    /// f(θ) = σ sin θ
    Sine { sigma: f64 },
    /// f ≡ 0
    Slap,
    Custom {
        name: String,
        eval: LawFn,
        deriv: LawFn,
        lambda: f64,
        odd: bool,
        class_b: bool,
    },
}

/// An evaluable reflection law with derivative, contraction bound and class
/// predicates. Immutable and cheap to clone.
#[derive(Clone)]
pub struct ReflectionLaw {
    kind: LawKind,
}

impl std::fmt::Debug for ReflectionLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            LawKind::Linear { sigma } => write!(f, "Linear({sigma})"),
            LawKind::Sine { sigma } => write!(f, "Sine({sigma})"),
            LawKind::Slap => write!(f, "Slap"),
            LawKind::Custom { name, lambda, .. } => write!(f, "Custom({name}, λ={lambda})"),
        }
    }
}

impl ReflectionLaw {
    /// Linear contraction f(θ) = σθ, 0 < σ < 1.
    pub fn linear(sigma: f64) -> Result<Self, LawError> {
        if !(0.0 < sigma && sigma < 1.0) {
            return Err(LawError::SigmaOutOfRange(sigma));
        }
        Ok(Self {
            kind: LawKind::Linear { sigma },
        })
    }

    /// f(θ) = σ sin θ, 0 < σ < 1. Satisfies sup |f'(θ)|/cos θ = σ < 1.
    pub fn sine(sigma: f64) -> Result<Self, LawError> {
        if !(0.0 < sigma && sigma < 1.0) {
            return Err(LawError::SigmaOutOfRange(sigma));
        }
        Ok(Self {
            kind: LawKind::Sine { sigma },
        })
    }

    /// The slap law f ≡ 0.
    pub fn slap() -> Self {
        Self {
            kind: LawKind::Slap,
        }
    }

    /// User-defined law. The declared bound and `f(0) = 0` are verified on a
    /// Chebyshev grid of 10⁴ nodes; inconsistent declarations are rejected.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda: f64,
        odd: bool,
        class_b: bool,
    ) -> Result<Self, LawError> {
        let at_zero = eval(0.0);
        if at_zero.abs() > TOL_GEOM {
            return Err(LawError::NonzeroAtOrigin(at_zero));
        }
        for theta in chebyshev_nodes(GRID) {
            let d = deriv(theta).abs();
            if d > lambda + 1e-9 {
                return Err(LawError::LambdaBoundViolated {
                    theta,
                    observed: d,
                    declared: lambda,
                });
            }
        }
        Ok(Self {
            kind: LawKind::Custom {
                name: name.into(),
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
                lambda,
                odd,
                class_b,
            },
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match &self.kind {
            LawKind::Linear { sigma } => sigma * theta,
            LawKind::Sine { sigma } => sigma * theta.sin(),
            LawKind::Slap => 0.0,
            LawKind::Custom { eval, .. } => eval(theta),
        }
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        match &self.kind {
            LawKind::Linear { sigma } => *sigma,
            LawKind::Sine { sigma } => sigma * theta.cos(),
            LawKind::Slap => 0.0,
            LawKind::Custom { deriv, .. } => deriv(theta),
        }
    }

    /// Contraction bound λ(f) = sup |f'|. Exact for built-ins.
    pub fn lambda(&self) -> f64 {
        match &self.kind {
            LawKind::Linear { sigma } | LawKind::Sine { sigma } => *sigma,
            LawKind::Slap => 0.0,
            LawKind::Custom { lambda, .. } => *lambda,
        }
    }

    pub fn is_odd(&self) -> bool {
        match &self.kind {
            LawKind::Linear { .. } | LawKind::Sine { .. } | LawKind::Slap => true,
            LawKind::Custom { odd, .. } => *odd,
        }
    }

    /// Whether f is C² with f and f⁻¹ of bounded second derivative.
    pub fn class_b(&self) -> bool {
        match &self.kind {
            LawKind::Linear { .. } | LawKind::Sine { .. } => true,
            LawKind::Slap => false,
            LawKind::Custom { class_b, .. } => *class_b,
        }
    }

    /// Whether f' > 0 everywhere (sampled for custom laws).
    pub fn strictly_increasing(&self) -> bool {
        match &self.kind {
            LawKind::Linear { .. } | LawKind::Sine { .. } => true,
            LawKind::Slap => false,
            LawKind::Custom { deriv, .. } => chebyshev_nodes(GRID).all(|t| deriv(t) > 0.0),
        }
    }

    /// Continuous extension value at +π/2 (built-ins are monotone; custom
    /// laws are evaluated one-sided).
    pub fn at_half_pi(&self) -> f64 {
        match &self.kind {
            LawKind::Linear { sigma } => sigma * HALF_PI,
            LawKind::Sine { sigma } => *sigma,
            LawKind::Slap => 0.0,
            LawKind::Custom { eval, .. } => eval(HALF_PI - 1e-12),
        }
    }

    /// Continuous extension value at -π/2.
    pub fn at_neg_half_pi(&self) -> f64 {
        match &self.kind {
            LawKind::Linear { sigma } => -sigma * HALF_PI,
            LawKind::Sine { sigma } => -sigma,
            LawKind::Slap => 0.0,
            LawKind::Custom { eval, .. } => eval(-HALF_PI + 1e-12),
        }
    }

    /// Inverse of a strictly monotone law; panics on the slap law.
    pub fn invert(&self, theta: f64) -> Option<f64> {
        match &self.kind {
            LawKind::Linear { sigma } => {
                let t = theta / sigma;
                (t.abs() < HALF_PI).then_some(t)
            }
            LawKind::Sine { sigma } => {
                let u = theta / sigma;
                (u.abs() < 1.0).then(|| u.asin())
            }
            LawKind::Slap => panic!("slap law is not invertible"),
            LawKind::Custom { eval, .. } => {
                // Bisection on the monotone law.
                let (mut lo, mut hi) = (-HALF_PI + 1e-15, HALF_PI - 1e-15);
                let increasing = eval(hi) > eval(lo);
                let (flo, fhi) = (eval(lo), eval(hi));
                let (min, max) = if increasing { (flo, fhi) } else { (fhi, flo) };
                if theta <= min || theta >= max {
                    return None;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (eval(mid) > theta) == increasing {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            }
        }
    }
}

/// Estimate of the seminorm λ(f₁ - f₂) = sup |f₁' - f₂'| over a Chebyshev
/// grid. This seminorm controls ‖Φ_{f₁} - Φ_{f₂}‖∞ up to the factor π/2.
pub fn law_distance(f1: &ReflectionLaw, f2: &ReflectionLaw) -> f64 {
    chebyshev_nodes(GRID)
        .map(|t| (f1.deriv(t) - f2.deriv(t)).abs())
        .fold(0.0, f64::max)
}

/// Chebyshev nodes on (-π/2, π/2): clustered toward the endpoints, which
/// controls blowup of derivative estimates near ±π/2.
pub fn chebyshev_nodes(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        let x = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        x * HALF_PI
    })
}

/// Serializable law description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum LawSpec {
    Linear { sigma: f64 },
    Sine { sigma: f64 },
    Slap,
}

impl LawSpec {
    pub fn build(&self) -> Result<ReflectionLaw, LawError> {
        match self {
            LawSpec::Linear { sigma } => ReflectionLaw::linear(*sigma),
            LawSpec::Sine { sigma } => ReflectionLaw::sine(*sigma),
            LawSpec::Slap => Ok(ReflectionLaw::slap()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_law_basics() {
        let f = ReflectionLaw::linear(0.5).unwrap();
        assert!((f.eval(std::f64::consts::FRAC_PI_4) - std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert_eq!(f.deriv(0.3), 0.5);
        assert_eq!(ReflectionLaw::linear(0.3).unwrap().lambda(), 0.3);
        assert!(matches!(
            ReflectionLaw::linear(1.0),
            Err(LawError::SigmaOutOfRange(_))
        ));
    }

    #[test]
    fn sine_law_zero2_ratio() {
        // sup |f'(θ)|/cos θ = σ for f = σ sin θ.
        let f = ReflectionLaw::sine(0.9).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        let sup = chebyshev_nodes(20_000)
            .map(|t| f.deriv(t).abs() / t.cos())
            .fold(0.0, f64::max);
        assert!((sup - 0.9).abs() < 1e-9);
        assert!((ReflectionLaw::sine(0.5).unwrap().at_half_pi() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slap_law_is_zero() {
        let f = ReflectionLaw::slap();
        assert_eq!(f.eval(0.7), 0.0);
        assert_eq!(f.lambda(), 0.0);
        assert_eq!(f.deriv(-1.2), 0.0);
    }

    #[test]
    fn law_distance_estimates() {
        let a = ReflectionLaw::linear(0.5).unwrap();
        let b = ReflectionLaw::linear(0.4).unwrap();
        assert!((law_distance(&a, &b) - 0.1).abs() < 1e-12);
        assert_eq!(law_distance(&a, &a), 0.0);
        let c = ReflectionLaw::linear(0.3).unwrap();
        assert!((law_distance(&ReflectionLaw::slap(), &c) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn odd_symmetry_on_grid() {
        for f in [
            ReflectionLaw::linear(0.7).unwrap(),
            ReflectionLaw::sine(0.3).unwrap(),
        ] {
            assert!(f.is_odd());
            for t in chebyshev_nodes(101) {
                assert_eq!(f.eval(-t), -f.eval(t));
            }
        }
    }

    #[test]
    fn extension_values_match_one_sided_limits() {
        for f in [
            ReflectionLaw::linear(0.6).unwrap(),
            ReflectionLaw::sine(0.8).unwrap(),
        ] {
            let lim = f.eval(std::f64::consts::FRAC_PI_2 - 1e-9);
            assert!((lim - f.at_half_pi()).abs() < 1e-8);
            let lim = f.eval(-std::f64::consts::FRAC_PI_2 + 1e-9);
            assert!((lim - f.at_neg_half_pi()).abs() < 1e-8);
        }
    }

    #[test]
    fn custom_law_verification() {
        let ok = ReflectionLaw::custom(
            "atan-ish",
            |t: f64| 0.4 * t.tanh(),
            |t: f64| 0.4 / t.cosh().powi(2),
            0.4,
            true,
            true,
        );
        assert!(ok.is_ok());
        let bad = ReflectionLaw::custom("lying", |t| 0.9 * t, |_| 0.9, 0.5, true, true);
        assert!(matches!(bad, Err(LawError::LambdaBoundViolated { .. })));
        let shifted = ReflectionLaw::custom("shifted", |t| 0.1 + 0.2 * t, |_| 0.2, 0.2, false, true);
        assert!(matches!(shifted, Err(LawError::NonzeroAtOrigin(_))));
    }

    #[test]
    fn invert_builtin_laws() {
        let f = ReflectionLaw::linear(0.5).unwrap();
        assert!((f.invert(0.2).unwrap() - 0.4).abs() < 1e-15);
        let g = ReflectionLaw::sine(0.5).unwrap();
        let t = g.invert(0.3).unwrap();
        assert!((g.eval(t) - 0.3).abs() < 1e-12);
        assert_eq!(g.invert(0.6), None);
    }

    #[test]
    fn law_spec_json() {
        let s: LawSpec = serde_json::from_str(r#"{"law":"linear","sigma":0.5}"#).unwrap();
        assert_eq!(
            s,
            LawSpec::Linear { sigma: 0.5 }
        );
        let s: LawSpec = serde_json::from_str(r#"{"law":"slap"}"#).unwrap();
        assert_eq!(s.build().unwrap().lambda(), 0.0);
    }
}

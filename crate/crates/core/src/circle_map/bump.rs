//! Smooth bump profiles used to localize the perturbation.
//!
//! `plateau` is the function θ of the construction: supported in [-1/2, 1/2],
//! identically 1 on [-1/4, 1/4]. `chi(u) = u θ(u)` then satisfies
//! `chi(0) = 0` and `chi'(0) = 1`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// C^∞ transition built from `exp(-1/u)`.
    #[default]
    Exponential,
    /// Quintic smoothstep `6t^5 - 15t^4 + 10t^3`; only C².
    Smoothstep,
}

impl BumpKind {
    /// Transition from 0 (t ≤ 0) to 1 (t ≥ 1) and its derivative.
    fn transition(self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0);
        }
        match self {
            BumpKind::Exponential => {
                let a = (-1.0 / t).exp();
                let b = (-1.0 / (1.0 - t)).exp();
                let da = a / (t * t);
                let db = b / ((1.0 - t) * (1.0 - t));
                let s = a + b;
                (a / s, (da * b + a * db) / (s * s))
            }
            BumpKind::Smoothstep => {
                let v = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
                let dv = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                (v, dv)
            }
        }
    }

    /// θ(u) and θ'(u).
    pub fn plateau(self, u: f64) -> (f64, f64) {
        let t = 2.0 - 4.0 * u.abs();
        let (v, dv) = self.transition(t);
        (v, -4.0 * u.signum() * dv)
    }

    /// χ(u) = u θ(u) and χ'(u).
    pub fn chi(self, u: f64) -> (f64, f64) {
        if u.abs() >= 0.5 {
            return (0.0, 0.0);
        }
        let (v, dv) = self.plateau(u);
        (u * v, v + u * dv)
    }

    /// Grid estimate of sup |χ'| over the support.
    pub fn sup_chi_prime(self) -> f64 {
        const SAMPLES: usize = 20_000;
        (0..=SAMPLES)
            .map(|i| {
                let u = -0.5 + i as f64 / SAMPLES as f64;
                self.chi(u).1.abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_shape() {
        for kind in [BumpKind::Exponential, BumpKind::Smoothstep] {
            assert_eq!(kind.plateau(0.0).0, 1.0);
            assert_eq!(kind.plateau(0.25).0, 1.0);
            assert_eq!(kind.plateau(-0.25).0, 1.0);
            assert_eq!(kind.plateau(0.5).0, 0.0);
            assert_eq!(kind.plateau(-0.7).0, 0.0);
            let mid = kind.plateau(0.375).0;
            assert!((mid - 0.5).abs() < 1e-12, "{kind:?} {mid}");
        }
    }

    #[test]
    fn chi_normalization() {
        for kind in [BumpKind::Exponential, BumpKind::Smoothstep] {
            assert_eq!(kind.chi(0.0), (0.0, 1.0));
        }
    }

    #[test]
    fn chi_derivative_matches_finite_differences() {
        let h = 1e-6;
        for kind in [BumpKind::Exponential, BumpKind::Smoothstep] {
            for i in 0..200 {
                let u = -0.55 + 1.1 * (i as f64 + 0.5) / 200.0;
                let fd = (kind.chi(u + h).0 - kind.chi(u - h).0) / (2.0 * h);
                assert!((fd - kind.chi(u).1).abs() < 1e-6, "{kind:?} u={u}");
            }
        }
    }
}

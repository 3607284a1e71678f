//! The perturbed doubling map `f(θ) = 2θ + g(θ)` on the circle.
//!
//! `g = Σ_K α_K 8^{-K} χ(8^K(θ - 1/(2^K - 1)))` is a sum of bumps placed on
//! the lattice points `1/(2^K - 1)`, each of which is an exactly periodic
//! point of `f` with prescribed Lyapunov exponent `e^{β_K}`.

mod bump;
mod coefficients;
mod lattice;

use std::fmt;

use dashu_float::ops::Abs;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

pub use bump::BumpKind;
pub use coefficients::{ln_ln_2, parse_decimal, render_decimal, ExactBeta, ALPHA_DIGITS};
pub use lattice::{
    default_radius, dyadic_radius, verify_lattice, verify_lattice_with_radius, LatticeInterval,
    LatticeReport, LatticeViolation,
};

/// Default truncation order; `α_N` for `N ≥ 6` is below double resolution.
pub const DEFAULT_N_MAX: u32 = 5;
/// Residual accepted by [`periodic_theta`].
pub const PERIODIC_TOLERANCE: f64 = 1e-12;
/// Residual accepted by [`lyapunov_periodic`].
pub const LYAPUNOV_INPUT_TOLERANCE: f64 = 1e-10;

/// A point of ℝ/ℤ, stored as its representative in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        let r = x - x.floor();
        // x slightly below an integer can round up to exactly 1.0
        CirclePoint(if r >= 1.0 { 0.0 } else { r })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn distance(self, other: CirclePoint) -> f64 {
        circle_distance(self.0, other.0)
    }
}

impl From<f64> for CirclePoint {
    fn from(x: f64) -> Self {
        CirclePoint::new(x)
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `min(|a - b|, 1 - |a - b|)` after reduction mod 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Signed difference `a - b` reduced to `[-1/2, 1/2)`.
pub fn circle_difference(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}

/// Coefficients and bump profile defining `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    n_max: u32,
    betas: Vec<ExactBeta>,
    alpha_text: Vec<String>,
    alphas: Vec<f64>,
    bump: BumpKind,
    terms: Vec<BumpTerm>,
}

/// One bump `α 8^{-K} χ(8^K(x - c))`, supported in `(c - 8^{-K}/2, c + 8^{-K}/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BumpTerm {
    center: f64,
    scale: f64,
    alpha: f64,
    half_width: f64,
}

/// Builds the truncated coefficient family `(β_N, α_N)`, `N = 2..=n_max`.
pub fn coefficient_table(n_max: u32) -> PerturbationSpec {
    PerturbationSpec::explicit(n_max, BumpKind::default())
}

impl PerturbationSpec {
    /// `g ≡ 0`: the doubling map.
    pub fn linear() -> Self {
        Self::assemble(1, Vec::new(), Vec::new(), Vec::new(), BumpKind::default())
    }

    pub fn explicit(n_max: u32, bump: BumpKind) -> Self {
        assert!(n_max >= 1, "n_max must be at least 1");
        assert!(n_max <= 30, "n_max {n_max} exceeds the supported range");
        let betas: Vec<ExactBeta> = (2..=n_max).map(ExactBeta::for_order).collect();
        let exact_alphas: Vec<_> = betas.iter().map(ExactBeta::alpha).collect();
        let alphas = exact_alphas.iter().map(|a| a.to_f64().value()).collect();
        let alpha_text = exact_alphas.iter().map(render_decimal).collect();
        Self::assemble(n_max, betas, alpha_text, alphas, bump)
    }

    /// Builds a spec from explicit parts, enforcing the coefficient invariants.
    pub fn from_parts(
        n_max: u32,
        betas: Vec<ExactBeta>,
        alpha_text: Vec<String>,
        bump: BumpKind,
    ) -> Result<Self> {
        if n_max == 0 || n_max > 30 {
            return Err(invalid(format!("n_max must lie in 1..=30, got {n_max}")));
        }
        let expected = (n_max - 1) as usize;
        if betas.len() != expected || alpha_text.len() != expected {
            return Err(invalid(format!(
                "n_max = {n_max} needs {expected} coefficients, got {} betas and {} alphas",
                betas.len(),
                alpha_text.len()
            )));
        }
        let mut alphas = Vec::with_capacity(expected);
        for (i, (beta, text)) in betas.iter().zip(&alpha_text).enumerate() {
            let order = i as u32 + 2;
            if beta.order != order {
                return Err(invalid(format!(
                    "beta {i} has order {}, expected {order}",
                    beta.order
                )));
            }
            let b = beta.to_f64();
            if !(b > -0.37 && b < -0.36) {
                return Err(invalid(format!(
                    "beta_{order} = {b} outside (-0.37, -0.36)"
                )));
            }
            let alpha = parse_decimal(text)
                .ok_or_else(|| invalid(format!("alpha_{order} is not a decimal: {text:?}")))?;
            let bound = order as f64 * 10f64.powi(1 - (order * order) as i32);
            if alpha.abs() > bound {
                return Err(invalid(format!(
                    "|alpha_{order}| = {} exceeds {bound:e}",
                    alpha.abs()
                )));
            }
            alphas.push(alpha);
        }
        let sup = bump.sup_chi_prime();
        let c1: f64 = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() * 8f64.powi(i as i32 + 2) * sup)
            .sum();
        if c1 >= 1.0 {
            return Err(invalid(format!("C1 bound on g is {c1}, must be below 1")));
        }
        Ok(Self::assemble(n_max, betas, alpha_text, alphas, bump))
    }

    fn assemble(
        n_max: u32,
        betas: Vec<ExactBeta>,
        alpha_text: Vec<String>,
        alphas: Vec<f64>,
        bump: BumpKind,
    ) -> Self {
        let terms = alphas
            .iter()
            .enumerate()
            .map(|(i, &alpha)| {
                let order = i as i32 + 2;
                let scale = 8f64.powi(order);
                BumpTerm {
                    center: 1.0 / (2f64.powi(order) - 1.0),
                    scale,
                    alpha,
                    half_width: 0.5 / scale,
                }
            })
            .collect();
        PerturbationSpec {
            n_max,
            betas,
            alpha_text,
            alphas,
            bump,
            terms,
        }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn is_linear(&self) -> bool {
        self.alphas.iter().all(|&a| a == 0.0)
    }

    pub fn bump_kind(&self) -> BumpKind {
        self.bump
    }

    pub fn betas(&self) -> &[ExactBeta] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_text(&self) -> &[String] {
        &self.alpha_text
    }

    /// `α_N`, or `None` outside `2..=n_max`.
    pub fn alpha(&self, order: u32) -> Option<f64> {
        order
            .checked_sub(2)
            .and_then(|i| self.alphas.get(i as usize))
            .copied()
    }

    pub fn beta(&self, order: u32) -> Option<&ExactBeta> {
        order
            .checked_sub(2)
            .and_then(|i| self.betas.get(i as usize))
    }

    /// `Σ |α_N| sup|χ'|`, an upper bound for `sup |g'|`.
    pub fn derivative_bound(&self) -> f64 {
        let sup = self.bump.sup_chi_prime();
        self.alphas.iter().map(|a| a.abs() * sup).sum()
    }

    /// `(g(x), g'(x))` for a real `x`; `g` is 1-periodic.
    pub fn g_lift(&self, x: f64) -> (f64, f64) {
        let x = x.rem_euclid(1.0);
        let mut g = 0.0;
        let mut dg = 0.0;
        for term in &self.terms {
            let offset = x - term.center;
            if offset.abs() >= term.half_width {
                continue;
            }
            let (c, dc) = self.bump.chi(term.scale * offset);
            g += term.alpha * c / term.scale;
            dg += term.alpha * dc;
        }
        (g, dg)
    }

    pub fn g_eval(&self, x: CirclePoint) -> (f64, f64) {
        self.g_lift(x.value())
    }

    /// Lift `2x + g(x)` and `f'(x)`, without reduction mod 1.
    pub fn f_lift(&self, x: f64) -> (f64, f64) {
        let (g, dg) = self.g_lift(x);
        (2.0 * x + g, 2.0 + dg)
    }

    pub fn f_eval(&self, x: CirclePoint) -> (CirclePoint, f64) {
        let (y, dy) = self.f_lift(x.value());
        (CirclePoint::new(y), dy)
    }

    /// `ln f'(x)`, the unstable log-derivative `τ`.
    pub fn log_derivative(&self, x: f64) -> f64 {
        self.f_lift(x).1.ln()
    }

    /// N-fold iterate on the circle.
    pub fn iterate(&self, x: CirclePoint, n: u32) -> CirclePoint {
        (0..n).fold(x, |p, _| self.f_eval(p).0)
    }
}

/// `θ_N = 1/(2^N - 1)` and the circle distance between `f^N(θ_N)` and `θ_N`.
pub fn periodic_theta(spec: &PerturbationSpec, n: u32) -> Result<(CirclePoint, f64)> {
    if !(2..=52).contains(&n) {
        return Err(invalid(format!("period must lie in 2..=52, got {n}")));
    }
    let theta = CirclePoint::new(1.0 / (2f64.powi(n as i32) - 1.0));
    let residual = spec.iterate(theta, n).distance(theta);
    if residual >= PERIODIC_TOLERANCE {
        return Err(Error::NotPeriodic {
            period: n,
            residual,
            tolerance: PERIODIC_TOLERANCE,
        });
    }
    Ok((theta, residual))
}

/// `(1/N) Σ_{k<N} ln f'(f^k θ)` for an `N`-periodic `θ`.
pub fn lyapunov_periodic(spec: &PerturbationSpec, theta: CirclePoint, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("period must be positive"));
    }
    let mut p = theta;
    let mut sum = 0.0;
    for _ in 0..n {
        let (next, df) = spec.f_eval(p);
        sum += df.ln();
        p = next;
    }
    let residual = p.distance(theta);
    if residual > LYAPUNOV_INPUT_TOLERANCE {
        return Err(Error::NotPeriodic {
            period: n,
            residual,
            tolerance: LYAPUNOV_INPUT_TOLERANCE,
        });
    }
    Ok(sum / n as f64)
}

/// One line of the periodic Lyapunov spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumLine {
    pub period: u32,
    pub theta: f64,
    pub residual: f64,
    /// Computed along the orbit in double precision.
    pub exponent: f64,
    /// `ln 2 + (1/N) ln(1 + α_N/2)`.
    pub closed_form: f64,
    /// `e^{β_N}`, rounded from high precision.
    pub exp_beta: f64,
    pub exp_beta_text: String,
}

/// Periodic-orbit Lyapunov exponents and the smallest pairwise gap among
/// the prescribed values `e^{β_N}`.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovSpectrum {
    pub lines: Vec<SpectrumLine>,
    /// Smallest `|e^{β_M} - e^{β_N}|`, computed in high precision.
    pub min_gap: Option<f64>,
    pub min_gap_text: Option<String>,
    /// `10^{-n_max² - 2}`.
    pub gap_threshold: f64,
}

impl LyapunovSpectrum {
    pub fn distinct(&self) -> bool {
        self.min_gap.is_none_or(|g| g > self.gap_threshold)
    }
}

pub fn lyapunov_spectrum(spec: &PerturbationSpec) -> Result<LyapunovSpectrum> {
    let digits = coefficients::working_digits(spec.n_max().max(2));
    let mut lines = Vec::new();
    let mut exact = Vec::new();
    for (i, beta) in spec.betas().iter().enumerate() {
        let n = i as u32 + 2;
        let (theta, residual) = periodic_theta(spec, n)?;
        let exponent = lyapunov_periodic(spec, theta, n)?;
        let alpha = spec.alphas()[i];
        let e = beta.exp_dbig(digits);
        lines.push(SpectrumLine {
            period: n,
            theta: theta.value(),
            residual,
            exponent,
            closed_form: std::f64::consts::LN_2 + (alpha / 2.0).ln_1p() / n as f64,
            exp_beta: e.to_f64().value(),
            exp_beta_text: render_decimal(&e),
        });
        exact.push(e);
    }
    let mut min_gap: Option<dashu_float::DBig> = None;
    for i in 0..exact.len() {
        for j in i + 1..exact.len() {
            let gap = (&exact[i] - &exact[j]).abs();
            if min_gap.as_ref().is_none_or(|g| gap < *g) {
                min_gap = Some(gap);
            }
        }
    }
    Ok(LyapunovSpectrum {
        lines,
        min_gap: min_gap.as_ref().map(|g| g.to_f64().value()),
        min_gap_text: min_gap.as_ref().map(render_decimal),
        gap_threshold: 10f64.powi(-((spec.n_max() * spec.n_max()) as i32) - 2),
    })
}

#[derive(Serialize, Deserialize)]
struct BetaWire {
    num: String,
    den_exp: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecWire {
    n_max: u32,
    betas: Vec<BetaWire>,
    alphas: Vec<String>,
    bump_kind: BumpKind,
}

impl Serialize for PerturbationSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecWire {
            n_max: self.n_max,
            betas: self
                .betas
                .iter()
                .map(|b| BetaWire {
                    num: b.numerator.to_string(),
                    den_exp: b.den_exp(),
                })
                .collect(),
            alphas: self.alpha_text.clone(),
            bump_kind: self.bump,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PerturbationSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = SpecWire::deserialize(deserializer)?;
        let mut betas = Vec::with_capacity(wire.betas.len());
        for (i, b) in wire.betas.iter().enumerate() {
            let order = i as u32 + 2;
            if b.den_exp != order * order {
                return Err(D::Error::custom(format!(
                    "beta_{order} must have den_exp {}, got {}",
                    order * order,
                    b.den_exp
                )));
            }
            let numerator = b
                .num
                .parse()
                .map_err(|_| D::Error::custom(format!("beta_{order} numerator {:?}", b.num)))?;
            betas.push(ExactBeta { order, numerator });
        }
        PerturbationSpec::from_parts(wire.n_max, betas, wire.alphas, wire.bump_kind)
            .map_err(D::Error::custom)
    }
}

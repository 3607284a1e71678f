//! Fourier transforms of the equilibrium states: `ν̂` on the circle by
//! product quadrature, `μ̂` on the solenoid by Monte Carlo, and power-law fits.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle_map::circle_difference;
use crate::circle_map::{BumpKind, PerturbationSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::solenoid::{attract, SolenoidPoint};
use crate::stats::least_squares;
use crate::thermo::{sample, EquilibriumData};

pub const MIN_SAMPLES: usize = 1000;
pub const MIN_DEPTH: u32 = 20;
const MAX_FIBER_RESOLUTION: f64 = 1e-9;
const TAYLOR_CUTOFF: f64 = 0.5;

/// Smallest grid trusted at frequency `t`: `m ≥ 8t/2π`.
pub fn required_grid(t: f64) -> usize {
    (8.0 * t.abs() / (2.0 * PI)).ceil() as usize
}

/// The observable whose oscillation is integrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// `θ ↦ θ`.
    #[default]
    Identity,
    /// `θ ↦ degree·θ + periodic(θ)`.
    Lifted { periodic: GridFunction, degree: i64 },
}

impl Phase {
    fn node_values(&self, m: usize) -> Result<Vec<f64>> {
        match self {
            Phase::Identity => Ok((0..=m).map(|i| i as f64 / m as f64).collect()),
            Phase::Lifted { periodic, degree } => {
                if periodic.len() != m {
                    return Err(invalid("phase grid differs from the density grid"));
                }
                let v = periodic.values();
                Ok((0..=m)
                    .map(|i| *degree as f64 * i as f64 / m as f64 + v[i % m])
                    .collect())
            }
        }
    }
}

/// The amplitude multiplying the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    #[default]
    Constant,
    /// Smooth bump equal to 1 within `half_width/2` of `center` and
    /// vanishing beyond `half_width`.
    Bump { center: f64, half_width: f64 },
}

impl Amplitude {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Amplitude::Constant => 1.0,
            Amplitude::Bump { center, half_width } => {
                BumpKind::Exponential
                    .plateau(0.5 * circle_difference(x, center) / half_width)
                    .0
            }
        }
    }

    fn validate(self) -> Result<()> {
        if let Amplitude::Bump { half_width, .. } = self {
            if !(half_width > 0.0 && half_width <= 0.5) {
                return Err(invalid("bump half width must lie in (0, 1/2]"));
            }
        }
        Ok(())
    }
}

/// `(∫_0^1 e^{ias} ds, ∫_0^1 s e^{ias} ds)`.
fn filon_moments(a: f64) -> (Complex64, Complex64) {
    if a.abs() < TAYLOR_CUTOFF {
        let ia = Complex64::new(0.0, a);
        let (mut e0, mut e1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut power = Complex64::new(1.0, 0.0);
        for j in 0..24 {
            e0 += power / (j + 1) as f64;
            e1 += power / (j + 2) as f64;
            power = power * ia / (j + 1) as f64;
        }
        (e0, e1)
    } else {
        let ia = Complex64::new(0.0, a);
        let e = Complex64::cis(a);
        let e0 = (e - 1.0) / ia;
        let e1 = e / ia - e0 / ia;
        (e0, e1)
    }
}

/// `∫_0^1 e^{it·phase} ρ` for piecewise-linear `phase` and `amp·ρ`,
/// integrated exactly cell by cell.
fn product_quadrature(t: f64, phase: &[f64], density: &[f64]) -> Complex64 {
    let m = density.len();
    let h = 1.0 / m as f64;
    let uniform = phase.windows(2).all(|w| w[1] - w[0] == phase[1] - phase[0]);
    let shared = uniform.then(|| filon_moments(t * (phase[1] - phase[0])));
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let (e0, e1) = shared.unwrap_or_else(|| filon_moments(t * (phase[k + 1] - phase[k])));
        let r0 = density[k];
        let dr = density[(k + 1) % m] - r0;
        total += Complex64::cis(t * phase[k]) * (e0 * r0 + e1 * dr);
    }
    total * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuHat {
    pub value: Complex64,
    /// Difference from the same rule on every other node.
    pub error_estimate: f64,
}

/// `ν̂(t) = ∫ e^{it·phase(θ)} dν(θ)`.
pub fn nu_hat(eq: &EquilibriumData, t: f64, phase: &Phase) -> Result<NuHat> {
    nu_hat_weighted(eq, t, phase, Amplitude::Constant)
}

pub fn nu_hat_weighted(
    eq: &EquilibriumData,
    t: f64,
    phase: &Phase,
    amplitude: Amplitude,
) -> Result<NuHat> {
    if !t.is_finite() {
        return Err(invalid("frequency must be finite"));
    }
    amplitude.validate()?;
    let m = eq.grid_size();
    let required = required_grid(t);
    if m < required {
        return Err(Error::UnresolvedFrequency {
            frequency: t,
            grid: m,
            required,
        });
    }
    let ph = phase.node_values(m)?;
    let rho: Vec<f64> = eq
        .density
        .values()
        .iter()
        .enumerate()
        .map(|(i, &r)| r * amplitude.eval(i as f64 / m as f64))
        .collect();
    let value = product_quadrature(t, &ph, &rho);
    let coarse_rho: Vec<f64> = rho.iter().step_by(2).copied().collect();
    let coarse_ph: Vec<f64> = ph.iter().step_by(2).copied().collect();
    let coarse = product_quadrature(t, &coarse_ph, &coarse_rho);
    Ok(NuHat {
        value,
        error_estimate: (value - coarse).norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuHat {
    pub value: Complex64,
    pub stderr: f64,
}

/// Attracted sample points of `μ`: `F^K(θ_i, 0, 0)` for `θ_i ~ ν`.
pub fn attracted_samples(
    spec: &PerturbationSpec,
    eq: &EquilibriumData,
    samples: usize,
    depth: u32,
    seed: u64,
) -> Result<Vec<SolenoidPoint>> {
    if samples < MIN_SAMPLES {
        return Err(invalid(format!("need at least {MIN_SAMPLES} samples")));
    }
    if depth < MIN_DEPTH || 4f64.powi(-(depth as i32)) > MAX_FIBER_RESOLUTION {
        return Err(invalid(format!(
            "depth {depth} does not resolve the fiber (need K ≥ {MIN_DEPTH})"
        )));
    }
    let thetas = sample(eq, samples, seed)?;
    Ok(thetas
        .par_iter()
        .map(|th| attract(spec, &SolenoidPoint::new(th.value(), 0.0, 0.0), depth))
        .collect())
}

/// Empirical `μ̂(ξ) = mean of e^{iξ·p}` with its standard error.
pub fn mu_hat_from_points(points: &[SolenoidPoint], xi: [f64; 3]) -> MuHat {
    let parts: Vec<Complex64> = points
        .par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .map(|p| {
                    let c = p.coords();
                    Complex64::cis(xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2])
                })
                .sum::<Complex64>()
        })
        .collect();
    let n = points.len() as f64;
    let value = parts.into_iter().sum::<Complex64>() / n;
    let var = (1.0 - value.norm_sqr()).max(0.0) * n / (n - 1.0);
    MuHat {
        value,
        stderr: (var / n).sqrt(),
    }
}

pub fn mu_hat(
    spec: &PerturbationSpec,
    eq: &EquilibriumData,
    xi: [f64; 3],
    samples: usize,
    depth: u32,
    seed: u64,
) -> Result<MuHat> {
    let points = attracted_samples(spec, eq, samples, depth, seed)?;
    Ok(mu_hat_from_points(&points, xi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub frequencies: Vec<f64>,
    pub moduli: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub exponent: f64,
    pub stderr: f64,
    /// Points kept after censoring at three standard errors.
    pub n_points: usize,
}

#[derive(Debug, Serialize)]
pub struct DecaySummary {
    pub exponent: f64,
    pub stderr: f64,
    pub n_points: usize,
}

impl DecaySeries {
    pub fn summary(&self) -> DecaySummary {
        DecaySummary {
            exponent: self.exponent,
            stderr: self.stderr,
            n_points: self.n_points,
        }
    }
}

/// Power-law fit of `modulus ~ frequency^exponent`.
pub fn decay_exponent(frequencies: &[f64], moduli: &[f64], stderrs: &[f64]) -> Result<DecaySeries> {
    let n = frequencies.len();
    if moduli.len() != n || stderrs.len() != n {
        return Err(invalid(
            "frequency, modulus and stderr lists differ in length",
        ));
    }
    if n < 8 {
        return Err(invalid(format!("need at least 8 frequencies, got {n}")));
    }
    if frequencies.windows(2).any(|w| w[1] <= w[0]) || frequencies[0] <= 0.0 {
        return Err(invalid("frequencies must be positive and increasing"));
    }
    if frequencies[n - 1] / frequencies[0] < 100.0 {
        return Err(invalid("frequencies must span at least two decades"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
        .filter(|&i| moduli[i] > 0.0 && moduli[i] >= 3.0 * stderrs[i])
        .map(|i| (frequencies[i].ln(), moduli[i].ln()))
        .unzip();
    if x.len() < 4 {
        return Err(Error::InsufficientData {
            usable: x.len(),
            required: 4,
        });
    }
    let fit = least_squares(&x, &y)?;
    Ok(DecaySeries {
        frequencies: frequencies.to_vec(),
        moduli: moduli.to_vec(),
        stderrs: stderrs.to_vec(),
        exponent: fit.slope,
        stderr: fit.slope_stderr,
        n_points: x.len(),
    })
}

/// `t = 2^j · base` for `j = 0..count`.
pub fn dyadic_schedule(base: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| base * 2f64.powi(j as i32)).collect()
}

/// `|ν̂|` over a frequency schedule, fitted.
pub fn nu_hat_decay(
    eq: &EquilibriumData,
    frequencies: &[f64],
    phase: &Phase,
) -> Result<DecaySeries> {
    let hats = frequencies
        .iter()
        .map(|&t| nu_hat(eq, t, phase))
        .collect::<Result<Vec<_>>>()?;
    let moduli: Vec<f64> = hats.iter().map(|h| h.value.norm()).collect();
    let errs: Vec<f64> = hats.iter().map(|h| h.error_estimate).collect();
    decay_exponent(frequencies, &moduli, &errs)
}

/// CSV with columns `frequency,modulus,stderr`.
pub fn write_decay_csv<W: Write>(writer: W, series: &DecaySeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frequency", "modulus", "stderr"])?;
    for i in 0..series.frequencies.len() {
        w.write_record([
            series.frequencies[i].to_string(),
            series.moduli[i].to_string(),
            series.stderrs[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

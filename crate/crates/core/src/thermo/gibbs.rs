use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circle_map::CirclePoint;
use crate::error::{invalid, Result};
use crate::grid::node;
use crate::stats::least_squares;
use crate::symbolic::{visit_cylinders, Word};

use super::{sample, EquilibriumData};

/// Longest word length handled by exact enumeration.
pub const MAX_EXACT_LENGTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsStats {
    pub n: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `Σ ν(U_a)` over the level.
    pub total_mass: f64,
}

/// Extremes of `ν(U_a) / e^{S_n φ(x_a)}` over all cylinders of length `n`.
pub fn gibbs_ratio_stats(eq: &EquilibriumData, n: usize) -> Result<GibbsStats> {
    check_length(n)?;
    let anti = eq.density.antiderivative();
    let mut stats = GibbsStats {
        n,
        ratio_min: f64::INFINITY,
        ratio_max: f64::NEG_INFINITY,
        total_mass: 0.0,
    };
    visit_cylinders(
        &eq.spec,
        n,
        |x| eq.phi_at(x),
        |v| {
            let mass = anti.integral(v.lo, v.hi);
            let ratio = mass / v.obs_sum.exp();
            stats.ratio_min = stats.ratio_min.min(ratio);
            stats.ratio_max = stats.ratio_max.max(ratio);
            stats.total_mass += mass;
        },
    )?;
    Ok(stats)
}

fn check_length(n: usize) -> Result<()> {
    if n == 0 || n > MAX_EXACT_LENGTH {
        return Err(invalid(format!(
            "word length must lie in 1..={MAX_EXACT_LENGTH}, got {n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub radii: Vec<f64>,
    pub sup_masses: Vec<f64>,
    pub slope: f64,
}

/// Slope of `ln sup_x ν(B(x, r))` against `ln r`, with centers on the grid.
pub fn upper_regularity_exponent(eq: &EquilibriumData, radii: &[f64]) -> Result<RegularityReport> {
    if radii.len() < 2 {
        return Err(invalid("need at least two radii"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|&r| !(r > 0.0 && r < 0.5)) {
        return Err(invalid("radii must be decreasing in (0, 1/2)"));
    }
    let anti = eq.density.antiderivative();
    let m = eq.grid_size();
    let sup_masses: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..m)
                .map(|i| {
                    let x = node(i, m);
                    anti.integral(x - r, x + r)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = sup_masses.iter().map(|s| s.ln()).collect();
    let slope = least_squares(&lx, &ly)?.slope;
    Ok(RegularityReport {
        radii: radii.to_vec(),
        sup_masses,
        slope,
    })
}

/// Sample budget for word lengths beyond exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo {
            samples: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub epsilon: f64,
    /// `(n, ν(complement of A_n(ε)))`.
    pub entries: Vec<(usize, f64)>,
    /// Slope of `ln fraction` against `n` over positive fractions; absent
    /// when fewer than two fractions are positive.
    pub fitted_rate: Option<f64>,
}

impl DeviationProfile {
    pub fn is_non_increasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

fn deviates(eq: &EquilibriumData, n: usize, tau_sum: f64, phi_sum: f64, epsilon: f64) -> bool {
    (tau_sum / n as f64 - eq.lyapunov).abs() >= epsilon
        || (phi_sum / tau_sum + eq.dimension).abs() >= epsilon
}

/// `ν` of the points whose Birkhoff averages of `τ` or `φ/τ` are
/// `ε`-far from `Λ` and `-δ`.
pub fn large_deviation_profile(
    eq: &EquilibriumData,
    epsilon: f64,
    n_list: &[usize],
    monte_carlo: MonteCarlo,
) -> Result<DeviationProfile> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(invalid("epsilon must be positive"));
    }
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list must be increasing positive integers"));
    }
    let anti = eq.density.antiderivative();
    let mut mc_points: Option<Vec<CirclePoint>> = None;
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let fraction = if n <= MAX_EXACT_LENGTH {
            let mut bad = 0.0;
            visit_cylinders(
                &eq.spec,
                n,
                |x| eq.phi_at(x),
                |v| {
                    if deviates(eq, n, v.tau_sum, v.obs_sum, epsilon) {
                        bad += anti.integral(v.lo, v.hi);
                    }
                },
            )?;
            bad.clamp(0.0, 1.0)
        } else {
            if monte_carlo.samples == 0 {
                return Err(invalid("Monte Carlo sample count must be positive"));
            }
            let points = match &mc_points {
                Some(p) => p,
                None => mc_points.insert(sample(eq, monte_carlo.samples, monte_carlo.seed)?),
            };
            let bad = points
                .iter()
                .filter(|p| {
                    let (mut x, mut tau, mut phi) = (p.value(), 0.0, 0.0);
                    for _ in 0..n {
                        tau += eq.tau_at(x);
                        phi += eq.phi_at(x);
                        x = eq.spec.f_eval(CirclePoint::new(x)).0.value();
                    }
                    deviates(eq, n, tau, phi, epsilon)
                })
                .count();
            bad as f64 / points.len() as f64
        };
        entries.push((n, fraction));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter(|e| e.1 > 0.0)
        .map(|&(n, f)| (n as f64, f.ln()))
        .unzip();
    let fitted_rate = least_squares(&xs, &ys).ok().map(|fit| fit.slope);
    Ok(DeviationProfile {
        epsilon,
        entries,
        fitted_rate,
    })
}

#[derive(Serialize)]
struct ProfileRow {
    n: usize,
    fraction: f64,
}

/// CSV with columns `n,fraction`.
pub fn write_profile_csv<W: Write>(writer: W, profile: &DeviationProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for &(n, fraction) in &profile.entries {
        w.serialize(ProfileRow { n, fraction })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularWords {
    pub n: usize,
    pub epsilon: f64,
    pub words: Vec<Word>,
    /// `e^{δΛn}`.
    pub reference: f64,
    /// Smallest `β` with `#words / e^{δΛn} ∈ [e^{-εβn}, e^{εβn}]`.
    pub beta_needed: f64,
}

impl RegularWords {
    pub fn cardinality(&self) -> usize {
        self.words.len()
    }
}

/// Words of length `n+1` whose anchor satisfies the `ε`-regularity tests
/// over its first `n` orbit points, optionally restricted to cylinders
/// meeting the window `[a, b]`.
pub fn regular_words(
    eq: &EquilibriumData,
    n: usize,
    epsilon: f64,
    window: Option<(f64, f64)>,
) -> Result<RegularWords> {
    check_length(n)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(invalid("epsilon must be positive"));
    }
    if let Some((a, b)) = window {
        if !(0.0..=1.0).contains(&a) || !(a..=1.0).contains(&b) {
            return Err(invalid("window must satisfy 0 ≤ a ≤ b ≤ 1"));
        }
    }
    let mut indices = Vec::new();
    visit_cylinders(
        &eq.spec,
        n + 1,
        |x| eq.phi_at(x),
        |v| {
            if let Some((a, b)) = window {
                if v.hi < a || v.lo > b {
                    return;
                }
            }
            let tau = v.tau_sum - v.tau_last;
            let phi = v.obs_sum - v.obs_last;
            if !deviates(eq, n, tau, phi, epsilon) {
                indices.push(v.index);
            }
        },
    )?;
    indices.sort_unstable();
    let words: Vec<Word> = indices
        .iter()
        .map(|&i| Word::from_index(i, n + 1))
        .collect();
    let reference = (eq.dimension * eq.lyapunov * n as f64).exp();
    let beta_needed = if words.is_empty() {
        f64::INFINITY
    } else {
        (words.len() as f64 / reference).ln().abs() / (epsilon * n as f64)
    };
    Ok(RegularWords {
        n,
        epsilon,
        words,
        reference,
        beta_needed,
    })
}

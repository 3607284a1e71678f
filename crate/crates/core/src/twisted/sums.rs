use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::least_squares;

use super::ZetaTable;

/// `#{(b, c) : |ζ(b) - ζ(c)| ≤ σ}` over ordered pairs, diagonal included.
pub fn nonconcentration_count(values: &[f64], sigma: f64) -> Result<u64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(invalid("sigma must be positive"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(count_sorted(&sorted, sigma))
}

fn count_sorted(sorted: &[f64], sigma: f64) -> u64 {
    let n = sorted.len();
    let mut off_diagonal = 0u64;
    let mut end = 0;
    for i in 0..n {
        end = end.max(i + 1);
        while end < n && sorted[end] - sorted[i] <= sigma {
            end += 1;
        }
        off_diagonal += (end - i - 1) as u64;
    }
    n as u64 + 2 * off_diagonal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub sigma_list: Vec<f64>,
    pub counts: Vec<u64>,
    #[serde(rename = "N")]
    pub size: usize,
    /// Slope of `ln(count/N²)` against `ln σ`.
    pub gamma_emp: f64,
    /// Whether `count/N² ≤ σ^{γ_emp}` at every `σ`.
    pub bound_holds: bool,
}

impl ConcentrationReport {
    pub fn fractions(&self) -> Vec<f64> {
        let n2 = (self.size as f64).powi(2);
        self.counts.iter().map(|&c| c as f64 / n2).collect()
    }
}

pub fn nonconcentration_report(
    table: &ZetaTable,
    sigma_list: &[f64],
) -> Result<ConcentrationReport> {
    if sigma_list.len() < 2 || sigma_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(
            "sigma_list must hold at least two increasing values",
        ));
    }
    if sigma_list[0] <= 0.0 {
        return Err(invalid("sigma must be positive"));
    }
    let mut sorted = table.values.clone();
    sorted.sort_by(f64::total_cmp);
    let counts: Vec<u64> = sigma_list
        .iter()
        .map(|&s| count_sorted(&sorted, s))
        .collect();
    let n2 = (sorted.len() as f64).powi(2);
    let lx: Vec<f64> = sigma_list.iter().map(|s| s.ln()).collect();
    let ly: Vec<f64> = counts.iter().map(|&c| (c as f64 / n2).ln()).collect();
    let gamma_emp = least_squares(&lx, &ly)?.slope;
    let bound_holds = counts
        .iter()
        .zip(sigma_list)
        .all(|(&c, &s)| c as f64 / n2 <= s.powf(gamma_emp));
    Ok(ConcentrationReport {
        sigma_list: sigma_list.to_vec(),
        counts,
        size: sorted.len(),
        gamma_emp,
        bound_holds,
    })
}

/// CSV with columns `sigma,count,count_over_N2`.
pub fn write_concentration_csv<W: Write>(writer: W, report: &ConcentrationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sigma", "count", "count_over_N2"])?;
    for ((sigma, count), frac) in report
        .sigma_list
        .iter()
        .zip(&report.counts)
        .zip(report.fractions())
    {
        w.write_record([sigma.to_string(), count.to_string(), frac.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Controls for the `k ≥ 3` fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpSumOptions {
    /// Running product sets up to this size are kept exactly.
    pub exact_cap: usize,
    /// Target second-order phase error per merged product.
    pub phase_tolerance: f64,
}

impl Default for ExpSumOptions {
    fn default() -> Self {
        ExpSumOptions {
            exact_cap: 1 << 16,
            phase_tolerance: 1e-8,
        }
    }
}

pub fn exp_sum(eta: f64, tables: &[ZetaTable]) -> Result<f64> {
    let values: Vec<&[f64]> = tables.iter().map(|t| t.values.as_slice()).collect();
    exp_sum_values(eta, &values, ExpSumOptions::default())
}

pub fn exp_sum_with(eta: f64, tables: &[ZetaTable], options: ExpSumOptions) -> Result<f64> {
    let values: Vec<&[f64]> = tables.iter().map(|t| t.values.as_slice()).collect();
    exp_sum_values(eta, &values, options)
}

/// `N^{-k} |Σ_{b_1..b_k} e^{iη ζ_1(b_1)⋯ζ_k(b_k)}|`.
///
/// For `k ≥ 3` the first `k - 1` tables are folded into a weighted set of
/// partial products. Once that set outgrows `exact_cap`, products that lie
/// in one bin of width `√(2 tol)/(η · max of the remaining factors)` are
/// merged at their mean, which cancels the first-order phase error.
pub fn exp_sum_values(eta: f64, tables: &[&[f64]], options: ExpSumOptions) -> Result<f64> {
    let k = tables.len();
    if k == 0 {
        return Err(invalid("need at least one table"));
    }
    let n = tables[0].len();
    if n == 0 || tables.iter().any(|t| t.len() != n) {
        return Err(invalid("tables must be nonempty and of equal size"));
    }
    if !eta.is_finite() {
        return Err(invalid("eta must be finite"));
    }
    let total = match k {
        1 => tables[0]
            .iter()
            .map(|&z| Complex64::cis(eta * z))
            .sum::<Complex64>(),
        2 => ordered_sum(
            tables[0]
                .par_iter()
                .map(|&a| {
                    tables[1]
                        .iter()
                        .map(|&b| Complex64::cis(eta * a * b))
                        .sum::<Complex64>()
                })
                .collect(),
        ),
        _ => fold(eta, tables, options),
    };
    let norm = (k as f64) * (n as f64).ln();
    Ok((total.norm().ln() - norm).exp().min(1.0))
}

fn fold(eta: f64, tables: &[&[f64]], options: ExpSumOptions) -> Complex64 {
    let k = tables.len();
    let max_abs = |t: &[f64]| t.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut points: Vec<(f64, f64)> = tables[0].iter().map(|&z| (z, 1.0)).collect();
    for (j, table) in tables.iter().enumerate().take(k - 1).skip(1) {
        let mut next = Vec::with_capacity(points.len() * table.len());
        for &(p, w) in &points {
            for &z in table.iter() {
                next.push((p * z, w));
            }
        }
        if next.len() > options.exact_cap {
            let remaining: f64 = tables[j + 1..].iter().map(|t| max_abs(t)).product();
            let width = (2.0 * options.phase_tolerance).sqrt()
                / (eta.abs() * remaining).max(f64::MIN_POSITIVE);
            next = merge(next, width);
        }
        points = next;
    }
    let last = tables[k - 1];
    ordered_sum(
        points
            .par_iter()
            .map(|&(p, w)| {
                w * last
                    .iter()
                    .map(|&z| Complex64::cis(eta * p * z))
                    .sum::<Complex64>()
            })
            .collect(),
    )
}

/// Sequential sum of per-item partials, independent of the worker count.
fn ordered_sum(parts: Vec<Complex64>) -> Complex64 {
    parts.into_iter().sum()
}

fn merge(mut points: Vec<(f64, f64)>, width: f64) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut start = f64::NAN;
    let (mut sum_wp, mut sum_w) = (0.0, 0.0);
    for (p, w) in points {
        if sum_w > 0.0 && p - start > width {
            out.push((sum_wp / sum_w, sum_w));
            sum_wp = 0.0;
            sum_w = 0.0;
        }
        if sum_w == 0.0 {
            start = p;
        }
        sum_wp += w * p;
        sum_w += w;
    }
    if sum_w > 0.0 {
        out.push((sum_wp / sum_w, sum_w));
    }
    out
}

/// Moduli over a log-spaced `η` grid and their fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSumSweep {
    pub etas: Vec<f64>,
    pub moduli: Vec<f64>,
    pub slope: f64,
}

pub fn eta_sweep(
    tables: &[ZetaTable],
    eta_min: f64,
    eta_max: f64,
    count: usize,
    options: ExpSumOptions,
) -> Result<ExpSumSweep> {
    if !(eta_min > 0.0 && eta_max > eta_min) || count < 2 {
        return Err(invalid("need 0 < eta_min < eta_max and at least two etas"));
    }
    let ratio = (eta_max / eta_min).ln() / (count - 1) as f64;
    let etas: Vec<f64> = (0..count)
        .map(|i| eta_min * (ratio * i as f64).exp())
        .collect();
    let moduli = etas
        .iter()
        .map(|&eta| exp_sum_with(eta, tables, options))
        .collect::<Result<Vec<_>>>()?;
    let lx: Vec<f64> = etas.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = moduli
        .iter()
        .map(|m| m.max(f64::MIN_POSITIVE).ln())
        .collect();
    let slope = least_squares(&lx, &ly)?.slope;
    Ok(ExpSumSweep {
        etas,
        moduli,
        slope,
    })
}

/// CSV with columns `eta,exp_sum_modulus`.
pub fn write_exp_sum_csv<W: Write>(writer: W, sweep: &ExpSumSweep) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["eta", "exp_sum_modulus"])?;
    for (eta, m) in sweep.etas.iter().zip(&sweep.moduli) {
        w.write_record([eta.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn brute(values: &[f64], sigma: f64) -> u64 {
        let mut c = 0;
        for a in values {
            for b in values {
                if (a - b).abs() <= sigma {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn all_equal_and_wide_sigma() {
        let v = vec![1.5; 100];
        assert_eq!(nonconcentration_count(&v, 1e-9).unwrap(), 10_000);
        let w: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(nonconcentration_count(&w, 49.0).unwrap(), 2500);
        assert!(nonconcentration_count(&w, 0.0).is_err());
    }

    #[test]
    fn matches_brute_force_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..600)
            .map(|_| (rng.random_range(0..200) as f64) * 0.01)
            .collect();
        for sigma in [0.005, 0.01, 0.02, 0.1, 0.3] {
            assert_eq!(nonconcentration_count(&v, sigma).unwrap(), brute(&v, sigma));
        }
    }

    #[test]
    fn geometric_sum() {
        let n = 64;
        let v: Vec<f64> = (0..n).map(|b| b as f64 * 2.0 * PI / n as f64).collect();
        let s = exp_sum_values(1.0, &[&v], ExpSumOptions::default()).unwrap();
        assert!(s < 1e-12);
        let ones = vec![1.0; n];
        for k in 1..=4 {
            let tables = vec![ones.as_slice(); k];
            let s = exp_sum_values(3.7, &tables, ExpSumOptions::default()).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    fn triple(eta: f64, t: &[&[f64]]) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for a in t[0] {
            for b in t[1] {
                for c in t[2] {
                    s += Complex64::cis(eta * a * b * c);
                }
            }
        }
        s.norm() / (t[0].len() as f64).powi(3)
    }

    #[test]
    fn fold_agrees_with_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tabs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..48).map(|_| 1.0 + 0.1 * rng.random::<f64>()).collect())
            .collect();
        let refs: Vec<&[f64]> = tabs.iter().map(Vec::as_slice).collect();
        for eta in [1.0, 10.0, 60.0] {
            let exact = triple(eta, &refs);
            let folded = exp_sum_values(eta, &refs, ExpSumOptions::default()).unwrap();
            assert!((exact - folded).abs() < 1e-10);
            let binned = exp_sum_values(
                eta,
                &refs,
                ExpSumOptions {
                    exact_cap: 16,
                    phase_tolerance: 1e-10,
                },
            )
            .unwrap();
            assert!((exact - binned).abs() < 1e-7, "{exact} {binned}");
        }
    }

    #[test]
    fn concentration_csv_header() {
        let report = ConcentrationReport {
            sigma_list: vec![0.1, 0.2],
            counts: vec![4, 16],
            size: 4,
            gamma_emp: 2.0,
            bound_holds: false,
        };
        let mut buf = Vec::new();
        write_concentration_csv(&mut buf, &report).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sigma,count,count_over_N2\n0.1,4,0.25\n0.2,16,1\n"
        );
    }
}

//! Twisted transfer operators, derivative phase tables and the counting
//! and exponential-sum statistics built on them.

mod sums;

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::least_squares;
use crate::symbolic::{apply_word, visit_cylinders, Word};
use crate::thermo::EquilibriumData;

pub use sums::{
    eta_sweep, exp_sum, exp_sum_values, exp_sum_with, nonconcentration_count,
    nonconcentration_report, write_concentration_csv, write_exp_sum_csv, ConcentrationReport,
    ExpSumOptions, ExpSumSweep,
};

pub const MAX_PROFILE_LENGTH: usize = 200;
pub const MAX_ZETA_LENGTH: usize = 14;

/// `‖L_{it}^k 1‖_∞` on the grid for `k = 1..=n_max`.
///
/// The twist is `e^{it(τ - ln 2)}`, which differs from `e^{itτ}` by a
/// unimodular constant and so leaves every norm unchanged.
pub fn twisted_norm_profile(eq: &EquilibriumData, t: f64, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 || n_max > MAX_PROFILE_LENGTH {
        return Err(invalid(format!(
            "profile length must lie in 1..={MAX_PROFILE_LENGTH}, got {n_max}"
        )));
    }
    if !t.is_finite() {
        return Err(invalid("t must be finite"));
    }
    let ln2 = std::f64::consts::LN_2;
    let m = eq.grid_size();
    let coefficients: Vec<[Complex64; 2]> = eq
        .operator()
        .preimages()
        .iter()
        .zip(eq.weights())
        .map(|(pre, w)| {
            let c = |b: usize| Complex64::from_polar(w[b], t * (pre[b].tau - ln2));
            [c(0), c(1)]
        })
        .collect();
    let mut u = vec![Complex64::new(1.0, 0.0); m];
    let mut norms = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let next: Vec<Complex64> = eq
            .operator()
            .preimages()
            .iter()
            .zip(&coefficients)
            .map(|(pre, c)| {
                let val = |b: usize| {
                    let p = pre[b].pos;
                    let a = u[p.cell];
                    a + (u[p.next(m)] - a) * p.frac
                };
                c[0] * val(0) + c[1] * val(1)
            })
            .collect();
        norms.push(next.iter().map(|z| z.norm()).fold(0.0, f64::max));
        u = next;
    }
    Ok(norms)
}

/// Least-squares slope of `ln ‖L_{it}^k 1‖` against `k`.
pub fn profile_log_slope(norms: &[f64]) -> Result<f64> {
    let x: Vec<f64> = (1..=norms.len()).map(|k| k as f64).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    Ok(least_squares(&x, &y)?.slope)
}

#[derive(Serialize)]
struct NormRow {
    n: usize,
    norm: f64,
}

/// CSV with columns `n,norm`.
pub fn write_profile_csv<W: Write>(writer: W, norms: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (k, &norm) in norms.iter().enumerate() {
        w.serialize(NormRow { n: k + 1, norm })?;
    }
    w.flush()?;
    Ok(())
}

/// The phases `ζ(b) = e^{2Λn} |g'_{c' b'}(x_{b_{n+1}})|` for a context word
/// `c` and all words `b` of length `n + 1`, where `c' b'` has `2n` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaTable {
    pub n: usize,
    pub context: Word,
    /// Indexed by the binary index of `b`.
    pub values: Vec<f64>,
    pub lambda_used: f64,
}

impl ZetaTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spread(&self) -> f64 {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Smallest `c` with every value in `[e^{-cεn}, e^{cεn}]`.
    pub fn c_needed(&self, epsilon: f64) -> f64 {
        let worst = self.values.iter().map(|v| v.ln().abs()).fold(0.0, f64::max);
        worst / (epsilon * self.n as f64)
    }
}

/// `count` context words of length `n + 1` drawn uniformly from the seed.
pub fn random_contexts(n: usize, count: usize, seed: u64) -> Vec<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = (1u64 << (n + 1)) - 1;
    (0..count)
        .map(|_| Word::from_index(rng.random::<u64>() & mask, n + 1))
        .collect()
}

pub fn zeta_table(eq: &EquilibriumData, context: &Word, n: usize) -> Result<ZetaTable> {
    if n == 0 || n > MAX_ZETA_LENGTH {
        return Err(invalid(format!(
            "n must lie in 1..={MAX_ZETA_LENGTH}, got {n}"
        )));
    }
    if context.len() != n + 1 {
        return Err(invalid(format!(
            "context must have length n + 1 = {}, got {}",
            n + 1,
            context.len()
        )));
    }
    let prefix = context.prime();
    let mut anchors = vec![(0.0, 0.0); 1 << (n + 1)];
    visit_cylinders(
        &eq.spec,
        n + 1,
        |_| 0.0,
        |v| {
            anchors[v.index as usize] = (v.anchor, v.log_deriv);
        },
    )?;
    let scale = 2.0 * eq.lyapunov * n as f64;
    let values = anchors
        .iter()
        .map(|&(x, log_inner)| {
            let (_, outer) = apply_word(&eq.spec, &prefix, x)?;
            Ok((scale + log_inner + outer.ln()).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZetaTable {
        n,
        context: context.clone(),
        values,
        lambda_used: eq.lyapunov,
    })
}

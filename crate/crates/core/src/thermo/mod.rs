//! Transfer-operator thermodynamics of the circle factor.
//!
//! Potentials are functions of `θ` only, so the equilibrium state on the
//! solenoid is determined by its projection `ν` on the circle, and the
//! transfer operator acts through the two inverse branches of `f`.

mod gibbs;
mod sample;
mod transfer;

use serde::{Deserialize, Serialize};

use crate::circle_map::PerturbationSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::{node, validate_grid_size, GridFunction, GridPosition};

pub use gibbs::{
    gibbs_ratio_stats, large_deviation_profile, regular_words, upper_regularity_exponent,
    write_profile_csv, DeviationProfile, GibbsStats, MonteCarlo, RegularWords, RegularityReport,
    MAX_EXACT_LENGTH,
};
pub use sample::{sample, SAMPLE_BATCH};
pub use transfer::{transfer_apply, Preimage, TransferOperator};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// The potential `ψ` whose equilibrium state is sought.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `ψ ≡ 0`: the measure of maximal entropy.
    Mme,
    /// `ψ = -ln f'`: the absolutely continuous (SRB) state.
    Srb,
    /// Any grid function, interpolated.
    Grid(GridFunction),
}

impl Potential {
    pub fn eval(&self, spec: &PerturbationSpec, x: f64) -> f64 {
        match self {
            Potential::Mme => 0.0,
            Potential::Srb => -spec.log_derivative(x),
            Potential::Grid(g) => g.eval(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::Mme => "mme",
            Potential::Srb => "srb",
            Potential::Grid(_) => "grid",
        }
    }

    pub fn to_grid(&self, spec: &PerturbationSpec, m: usize) -> Result<GridFunction> {
        GridFunction::from_fn(m, |x| self.eval(spec, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Equilibrium state of a potential, discretized on a shared grid.
#[derive(Debug, Clone)]
pub struct EquilibriumData {
    pub spec: PerturbationSpec,
    pub potential: Potential,
    pub psi: GridFunction,
    /// Leading eigenvalue `e^P` of `L_ψ`.
    pub eigenvalue: f64,
    pub pressure: f64,
    /// Sup-normalized positive eigenfunction `h`.
    pub eigenfunction: GridFunction,
    /// Density of `ν`, with unit integral.
    pub density: GridFunction,
    /// Normalized potential `φ = ψ - P + ln h - ln h∘f` at the nodes.
    pub phi: GridFunction,
    pub lyapunov: f64,
    pub dimension: f64,
    pub iterations: usize,
    pub adjoint_iterations: usize,
    operator: TransferOperator,
    /// `e^{φ(y)}` for the two preimages of every node.
    weights: Vec<[f64; 2]>,
}

impl EquilibriumData {
    pub fn grid_size(&self) -> usize {
        self.psi.len()
    }

    pub fn operator(&self) -> &TransferOperator {
        &self.operator
    }

    /// Normalized weights `e^{φ(y)}` of the preimages of node `i`.
    pub fn weights(&self) -> &[[f64; 2]] {
        &self.weights
    }

    pub fn psi_at(&self, x: f64) -> f64 {
        self.potential.eval(&self.spec, x)
    }

    pub fn tau_at(&self, x: f64) -> f64 {
        self.spec.log_derivative(x)
    }

    /// `φ` at an arbitrary point, with `h` interpolated.
    pub fn phi_at(&self, x: f64) -> f64 {
        let fx = self.spec.f_lift(x).0;
        self.psi_at(x) - self.pressure + self.eigenfunction.eval(x).ln()
            - self.eigenfunction.eval(fx).ln()
    }

    /// `L_φ g` at the nodes.
    pub fn normalized_apply(&self, g: &[f64]) -> Vec<f64> {
        self.operator
            .preimages()
            .iter()
            .zip(&self.weights)
            .map(|(pre, w)| w[0] * pre[0].pos.interpolate(g) + w[1] * pre[1].pos.interpolate(g))
            .collect()
    }

    /// The discrete adjoint of [`normalized_apply`](Self::normalized_apply).
    pub fn normalized_apply_adjoint(&self, rho: &[f64]) -> Vec<f64> {
        let m = rho.len();
        let mut out = vec![0.0; m];
        for ((pre, w), &r) in self.operator.preimages().iter().zip(&self.weights).zip(rho) {
            for b in 0..2 {
                let p = pre[b].pos;
                out[p.cell] += w[b] * r * (1.0 - p.frac);
                out[p.next(m)] += w[b] * r * p.frac;
            }
        }
        out
    }

    /// `(‖L_φ 1 - 1‖_∞, ‖L*_φ ρ - ρ‖_1)`.
    pub fn normalization_residuals(&self) -> (f64, f64) {
        let m = self.grid_size();
        let one = self.normalized_apply(&vec![1.0; m]);
        let sup = one.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let rho = self.density.values();
        let back = self.normalized_apply_adjoint(rho);
        let l1 = back
            .iter()
            .zip(rho)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / m as f64;
        (sup, l1)
    }

    /// `∫ u dν` by the trapezoid rule on the nodes.
    pub fn integrate(&self, u: impl Fn(f64) -> f64) -> f64 {
        let m = self.grid_size();
        let rho = self.density.values();
        (0..m).map(|i| u(node(i, m)) * rho[i]).sum::<f64>() / m as f64
    }

    pub fn to_json(&self) -> EquilibriumJson<'_> {
        EquilibriumJson {
            potential: self.potential.name(),
            grid_m: self.grid_size(),
            pressure: self.pressure.to_string(),
            eigenvalue: self.eigenvalue.to_string(),
            lyapunov: self.lyapunov.to_string(),
            dimension: self.dimension.to_string(),
            iterations: self.iterations,
            adjoint_iterations: self.adjoint_iterations,
            potential_psi: self.psi.values(),
            eigenfunction: self.eigenfunction.values(),
            density: self.density.values(),
            phi: self.phi.values(),
        }
    }
}

/// Wire form of [`EquilibriumData`]: grids as arrays, scalars as decimal strings.
#[derive(Debug, Serialize)]
pub struct EquilibriumJson<'a> {
    pub potential: &'static str,
    pub grid_m: usize,
    pub pressure: String,
    pub eigenvalue: String,
    pub lyapunov: String,
    pub dimension: String,
    pub iterations: usize,
    pub adjoint_iterations: usize,
    pub potential_psi: &'a [f64],
    pub eigenfunction: &'a [f64],
    pub density: &'a [f64],
    pub phi: &'a [f64],
}

pub fn solve_equilibrium(
    spec: &PerturbationSpec,
    psi: &Potential,
    m: usize,
) -> Result<EquilibriumData> {
    solve_equilibrium_with(spec, psi, m, SolverOptions::default())
}

pub fn solve_equilibrium_with(
    spec: &PerturbationSpec,
    psi: &Potential,
    m: usize,
    options: SolverOptions,
) -> Result<EquilibriumData> {
    validate_grid_size(m)?;
    if let Potential::Grid(g) = psi {
        if g.len() != m {
            return Err(invalid(format!(
                "potential grid has {} nodes, solver grid has {m}",
                g.len()
            )));
        }
    }
    if options.tolerance.is_nan() || options.tolerance <= 0.0 || options.max_iterations == 0 {
        return Err(invalid(
            "solver tolerance and iteration cap must be positive",
        ));
    }
    let operator = TransferOperator::new(spec, psi, m)?;

    let mut h = vec![1.0; m];
    let mut lambda = f64::NAN;
    let mut iterations = 0;
    loop {
        if iterations == options.max_iterations {
            return Err(Error::NoConvergence {
                what: "eigenfunction power iteration",
                iterations,
                last_change: f64::NAN,
            });
        }
        iterations += 1;
        let mut next = operator.apply(&h);
        let top = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() || top <= 0.0 {
            return Err(invalid("transfer operator lost positivity"));
        }
        next.iter_mut().for_each(|v| *v /= top);
        let change = next
            .iter()
            .zip(&h)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let lambda_change = (top - lambda).abs();
        lambda = top;
        h = next;
        if change < options.tolerance && lambda_change < options.tolerance {
            break;
        }
    }
    if h.iter().any(|&v| v <= 0.0) {
        return Err(invalid("eigenfunction is not positive"));
    }

    let mut left = vec![1.0; m];
    let mut adjoint_iterations = 0;
    loop {
        if adjoint_iterations == options.max_iterations {
            return Err(Error::NoConvergence {
                what: "adjoint power iteration",
                iterations: adjoint_iterations,
                last_change: f64::NAN,
            });
        }
        adjoint_iterations += 1;
        let mut next = operator.apply_transpose(&left);
        let mean = next.iter().sum::<f64>() / m as f64;
        next.iter_mut().for_each(|v| *v /= mean);
        let change = next
            .iter()
            .zip(&left)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / m as f64;
        left = next;
        if change < options.tolerance {
            break;
        }
    }

    let mut rho: Vec<f64> = left.iter().zip(&h).map(|(a, b)| a * b).collect();
    let mass = rho.iter().sum::<f64>() / m as f64;
    rho.iter_mut().for_each(|v| *v /= mass);

    let pressure = lambda.ln();
    let eigenfunction = GridFunction::from_values_unchecked(h);
    let weights: Vec<[f64; 2]> = operator
        .preimages()
        .iter()
        .zip(eigenfunction.values())
        .map(|(pre, &hx)| {
            let w =
                |p: &Preimage| p.weight * p.pos.interpolate(eigenfunction.values()) / (lambda * hx);
            [w(&pre[0]), w(&pre[1])]
        })
        .collect();
    let psi_grid = psi.to_grid(spec, m)?;
    let phi_values: Vec<f64> = (0..m)
        .map(|i| {
            let x = node(i, m);
            let fx = spec.f_lift(x).0;
            psi_grid.values()[i] - pressure + eigenfunction.values()[i].ln()
                - GridPosition::locate(fx, m)
                    .interpolate(eigenfunction.values())
                    .ln()
        })
        .collect();
    let density = GridFunction::from_values_unchecked(rho);
    let phi = GridFunction::from_values_unchecked(phi_values);

    let lyapunov = (0..m)
        .map(|i| spec.log_derivative(node(i, m)) * density.values()[i])
        .sum::<f64>()
        / m as f64;
    let phi_mean = phi
        .values()
        .iter()
        .zip(density.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / m as f64;

    Ok(EquilibriumData {
        spec: spec.clone(),
        potential: psi.clone(),
        psi: psi_grid,
        eigenvalue: lambda,
        pressure,
        eigenfunction,
        density,
        phi,
        lyapunov,
        dimension: -phi_mean / lyapunov,
        iterations,
        adjoint_iterations,
        operator,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::coefficient_table;

    const M: usize = 1 << 12;

    #[test]
    fn linear_mme_is_lebesgue() {
        let eq = solve_equilibrium(&PerturbationSpec::linear(), &Potential::Mme, M).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((eq.pressure - ln2).abs() < 1e-14);
        assert!(eq.density.values().iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!(eq.phi.values().iter().all(|&p| (p + ln2).abs() < 1e-14));
        assert!((eq.lyapunov - ln2).abs() < 1e-12);
        assert!((eq.dimension - 1.0).abs() < 1e-12);
        assert!(eq.weights().iter().all(|w| w[0] == 0.5 && w[1] == 0.5));
    }

    #[test]
    fn linear_srb_has_zero_pressure() {
        let eq = solve_equilibrium(&PerturbationSpec::linear(), &Potential::Srb, M).unwrap();
        assert!(eq.pressure.abs() < 1e-14);
        assert!(eq.density.values().iter().all(|&r| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn perturbed_states() {
        let spec = coefficient_table(5);
        let mme = solve_equilibrium(&spec, &Potential::Mme, M).unwrap();
        assert!((mme.pressure - std::f64::consts::LN_2).abs() < 1e-12);
        let (sup, l1) = mme.normalization_residuals();
        assert!(sup < 1e-8 && l1 < 1e-8, "{sup} {l1}");
        assert!((mme.density.integral() - 1.0).abs() < 1e-12);
        let srb = solve_equilibrium(&spec, &Potential::Srb, M).unwrap();
        assert!(srb.pressure.abs() < 1e-9);
        assert!((srb.dimension - 1.0).abs() < 1e-6);
        assert!(srb.eigenfunction.min() > 0.0);
    }

    #[test]
    fn rejects_mismatched_potential() {
        let psi = Potential::Grid(GridFunction::constant(1 << 10, 0.0).unwrap());
        assert!(solve_equilibrium(&PerturbationSpec::linear(), &psi, M).is_err());
        assert!(solve_equilibrium(&PerturbationSpec::linear(), &Potential::Mme, 3).is_err());
    }
}

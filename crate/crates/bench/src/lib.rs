//! Shared fixtures for the benchmarks in `benches/`.

use solenoid_core::thermo::{solve_equilibrium, EquilibriumData, Potential};
use solenoid_core::{coefficient_table, PerturbationSpec};

pub fn perturbed() -> PerturbationSpec {
    coefficient_table(5)
}

pub fn mme(m: usize) -> EquilibriumData {
    solve_equilibrium(&perturbed(), &Potential::Mme, m).expect("equilibrium")
}

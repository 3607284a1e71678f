use rayon::prelude::*;

use crate::circle_map::PerturbationSpec;
use crate::error::{invalid, Result};
use crate::grid::{node, validate_grid_size, GridFunction, GridPosition};
use crate::symbolic::inverse_branch_lift;

use super::Potential;

/// One inverse-branch preimage `y` of a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub y: f64,
    pub pos: GridPosition,
    /// `τ(y) = ln f'(y)`.
    pub tau: f64,
    pub psi: f64,
    /// `e^{ψ(y)}`.
    pub weight: f64,
}

/// Collocation discretization of `L_ψ` on the nodes `i/m`.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    preimages: Vec<[Preimage; 2]>,
}

impl TransferOperator {
    pub fn new(spec: &PerturbationSpec, psi: &Potential, m: usize) -> Result<Self> {
        validate_grid_size(m)?;
        let preimages = (0..m)
            .into_par_iter()
            .map(|i| {
                let x = node(i, m);
                let branch = |a: u8| -> Result<Preimage> {
                    let (y, d) = inverse_branch_lift(spec, a, x)?;
                    let psi = psi.eval(spec, y);
                    Ok(Preimage {
                        y,
                        pos: GridPosition::locate(y, m),
                        tau: -d.ln(),
                        psi,
                        weight: psi.exp(),
                    })
                };
                Ok([branch(0)?, branch(1)?])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransferOperator { preimages })
    }

    pub fn grid_size(&self) -> usize {
        self.preimages.len()
    }

    pub fn preimages(&self) -> &[[Preimage; 2]] {
        &self.preimages
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        self.preimages
            .iter()
            .map(|[p, q]| p.weight * p.pos.interpolate(h) + q.weight * q.pos.interpolate(h))
            .collect()
    }

    /// Transpose for the inner product `⟨u, v⟩ = (1/m) Σ u_i v_i`.
    pub fn apply_transpose(&self, rho: &[f64]) -> Vec<f64> {
        let m = rho.len();
        let mut out = vec![0.0; m];
        for (pre, &r) in self.preimages.iter().zip(rho) {
            for p in pre {
                out[p.pos.cell] += p.weight * r * (1.0 - p.pos.frac);
                out[p.pos.next(m)] += p.weight * r * p.pos.frac;
            }
        }
        out
    }
}

/// `L_ψ h` at the nodes, with `ψ` and `h` given on the same grid.
pub fn transfer_apply(
    spec: &PerturbationSpec,
    potential: &GridFunction,
    h: &GridFunction,
) -> Result<GridFunction> {
    if potential.len() != h.len() {
        return Err(invalid("potential and function grids differ"));
    }
    let op = TransferOperator::new(spec, &Potential::Grid(potential.clone()), h.len())?;
    Ok(GridFunction::from_values_unchecked(op.apply(h.values())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::coefficient_table;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const M: usize = 1 << 10;

    #[test]
    fn constant_potentials() {
        let lin = PerturbationSpec::linear();
        let half = GridFunction::constant(M, -std::f64::consts::LN_2).unwrap();
        let one = GridFunction::constant(M, 1.0).unwrap();
        let out = transfer_apply(&lin, &half, &one).unwrap();
        assert!(out.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let zero = GridFunction::constant(M, 0.0).unwrap();
        let out = transfer_apply(&coefficient_table(5), &zero, &one).unwrap();
        assert!(out.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn adjoint_consistency() {
        let spec = coefficient_table(5);
        let op = TransferOperator::new(&spec, &Potential::Srb, M).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Vec<f64> = (0..M).map(|_| rng.random::<f64>()).collect();
        let rho: Vec<f64> = (0..M).map(|_| rng.random::<f64>()).collect();
        let dot =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / M as f64;
        let lhs = dot(&op.apply(&h), &rho);
        let rhs = dot(&h, &op.apply_transpose(&rho));
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

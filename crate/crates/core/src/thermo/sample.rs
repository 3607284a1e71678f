use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circle_map::CirclePoint;
use crate::error::{invalid, Result};
use crate::grid::GridFunction;

use super::EquilibriumData;

/// Draws per independent stream; batch `b` uses stream `b` of the seed, so
/// output does not depend on the worker count.
pub const SAMPLE_BATCH: usize = 1 << 16;

pub fn sample(eq: &EquilibriumData, count: usize, seed: u64) -> Result<Vec<CirclePoint>> {
    sample_density(&eq.density, count, seed)
}

pub(crate) fn sample_density(
    density: &GridFunction,
    count: usize,
    seed: u64,
) -> Result<Vec<CirclePoint>> {
    if count == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    if density.min() < 0.0 {
        return Err(invalid("density has negative values"));
    }
    let anti = density.antiderivative();
    let total = anti.total();
    let batches = count.div_ceil(SAMPLE_BATCH);
    let out: Vec<Vec<CirclePoint>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = SAMPLE_BATCH.min(count - b * SAMPLE_BATCH);
            (0..len)
                .map(|_| CirclePoint::new(anti.inverse(rng.random::<f64>() * total)))
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

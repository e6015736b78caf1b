use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::uniform_genome;
use crate::types::{Bound, Genome};

/// Isotropic Gaussian variation of uniformly chosen elites, clipped to
/// bounds. With no elites, samples uniformly in bounds instead.
pub fn gaussian_emit<R: Rng + ?Sized>(
    elites: &[&Genome],
    bounds: &[Bound],
    sigma: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Genome> {
    (0..count)
        .map(|_| match elites.choose(rng) {
            None => uniform_genome(bounds, rng),
            Some(parent) => {
                let values = parent
                    .as_slice()
                    .iter()
                    .map(|&v| {
                        let z: f64 = rng.sample(StandardNormal);
                        v + sigma * z
                    })
                    .collect();
                Genome(values).clipped(bounds)
            }
        })
        .collect()
}

//! Solution generators that feed MAP-Elites archives.

mod cmame;
mod gaussian;

pub use cmame::{rank_feedback, EmitterState, ImprovementEmitter, RankedFeedback};
pub use gaussian::gaussian_emit;

use rand::Rng;

use crate::types::{Bound, Genome};

/// Uniform sample inside `bounds`.
pub fn uniform_genome<R: Rng + ?Sized>(bounds: &[Bound], rng: &mut R) -> Genome {
    Genome(
        bounds
            .iter()
            .map(|b| if b.width() > 0.0 { rng.gen_range(b.lo..=b.hi) } else { b.lo })
            .collect(),
    )
}

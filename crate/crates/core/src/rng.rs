//! Seeded random streams.
//!
//! Every stochastic routine takes `&mut R where R: Rng`. Parallel drivers
//! derive one independent stream per work item with [`stream`], so results do
//! not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `index` of the generator family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

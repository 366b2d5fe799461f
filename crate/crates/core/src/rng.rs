//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

/// Stream for replication `r` under base seed `base`. Streams do not depend on
/// the order in which replications are run.
pub fn stream(base: u64, r: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(base ^ r)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

//! Seeded random streams.
//!
//! All stochastic code in the crate draws from ChaCha8 generators, so a seed
//! fully determines output across runs and platforms. Independent substreams
//! (per process, per fold, per restart) use ChaCha's stream parameter, which
//! keeps parallel generation identical to sequential generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root generator for a seed.
pub fn root(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `k` of the generator for `seed`.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

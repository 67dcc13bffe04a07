//! Deterministic per-replication random streams.
//!
//! A replication's seed is a bijective mix of `(base_seed, index)`, so seeds
//! never collide within a campaign and do not depend on which worker runs
//! the replication. Each seed keys a ChaCha8 generator, which is itself
//! counter based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index` in a campaign keyed by `base_seed`.
///
/// For a fixed base this is a composition of bijections in `index`, hence
/// collision free.
#[inline]
pub fn replication_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed ^ mix64(index.wrapping_mul(GOLDEN)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a base seed plus a small tuple
//! of counters (crop index, epoch, sample, ...). Deriving the stream from the
//! key rather than from a shared generator keeps results independent of
//! iteration order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a sequence of counters into a base seed.
pub fn derive_seed(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(mix64(seed), |acc, &c| mix64(acc ^ mix64(c)))
}

pub fn stream(seed: u64, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, counters))
}

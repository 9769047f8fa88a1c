//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by `(master seed, stream index)`
//! so that parallel tasks draw the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 finalizer applied to `master` offset by the stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(mix(master.wrapping_add(GOLDEN)) ^ stream.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Seed for a two-level stream, e.g. (sub-module, draw).
pub fn derive_seed2(master: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(master, a), b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A fresh seed from OS entropy, for runs where the caller gave none.
pub fn fresh_seed() -> u64 {
    rand::random()
}

//! Seeded random streams.
//!
//! Every Monte-Carlo work unit draws from its own ChaCha stream keyed by
//! `(master_seed, index)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

/// Stream `index` of the generator family seeded by `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Derive a sub-seed, useful when one work unit needs several independent streams.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master_seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

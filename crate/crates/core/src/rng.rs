//! Seeded random streams. Each consumer derives its own ChaCha stream from
//! the run seed, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers keep independent consumers apart.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const BOOTSTRAP: u64 = 2;
    pub const SEARCH: u64 = 3;
    pub const SYNTH: u64 = 4;
    pub const SUBSAMPLE: u64 = 5;
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, index)`.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, index));
    rng.set_stream(stream);
    rng
}

//! Seeded random streams.
//!
//! Every random phase draws from its own ChaCha8 stream, selected by
//! `(seed, stream id)`. Adding draws to one phase never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod stream {
    pub const PLANTED_SHUFFLE: u64 = 1;
    pub const CUT_EDGES: u64 = 2;
    /// Adversary action `k` uses stream `ADVERSARY + k`.
    pub const ADVERSARY: u64 = 1 << 20;
    pub const HSM: u64 = 3;
    pub const SKETCH: u64 = 1 << 32;
    pub const ORACLE: u64 = 2 << 32;
    pub const DRIVER: u64 = 3 << 32;
}

/// Generator for stream `id` of `seed`.
pub fn stream_rng(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Deterministically derives a child seed, for nested components that need
/// a full seed of their own.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // SplitMix64 finalizer over the combined words.
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

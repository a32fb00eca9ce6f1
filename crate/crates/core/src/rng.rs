//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers; each component of a run draws from its own stream so
/// that swapping one component (e.g. replaying recorded traffic) leaves the
/// others' draws untouched.
pub mod stream {
    pub const VIDEO: u64 = 1;
    pub const TRACKING: u64 = 2;
    pub const CLOUD_DL: u64 = 3;
    pub const CLOUD_UL: u64 = 4;
    pub const LOSS: u64 = 5;
    /// Stage streams are `STAGE_BASE + stage index`.
    pub const STAGE_BASE: u64 = 16;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream_rng(base: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream))
}

//! Seeded random streams.
//!
//! Each stochastic task draws from its own ChaCha8 stream, addressed by
//! `(seed, purpose, index)`, so results do not depend on how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes.
pub const SAMPLE: u64 = 1;
pub const BOOTSTRAP: u64 = 2;
pub const BIAS_SCAN: u64 = 3;
pub const SEARCH: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for task `index` of kind `purpose` under `seed`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(splitmix64(purpose) ^ index));
    rng
}

//! Seeding contract.
//!
//! Every random draw in the crate comes from `ChaCha8Rng` (rand_chacha 0.3),
//! seeded through `SeedableRng::seed_from_u64`. Per-trial seeds are derived from
//! a base seed with [`mix_seed`], a splitmix64 finalizer over the pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `base`: `splitmix64(base ^ splitmix64(index))`.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

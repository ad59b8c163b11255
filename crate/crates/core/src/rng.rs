//! Deterministic seed derivation.
//!
//! Every random draw in training (initialization, noise, batch sampling)
//! comes from a generator seeded by mixing the run seed with a stream tag
//! and indices such as the step number. Resuming at step `n` therefore needs
//! no serialized generator state: the seed and `n` reproduce the streams.

use rand::rngs::ChaCha8Rng;
use rand::SeedableRng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with an ordered list of stream identifiers.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}

//! Reproducible random streams keyed by `(seed, index, tag)`.
//!
//! Every replicate of a bootstrap or simulation draws from its own ChaCha
//! stream, so results do not depend on how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for within one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    ValidationResample = 0,
    NonValidationResample = 1,
    DataGeneration = 2,
    /// Seed for a nested bootstrap run inside a simulation replicate.
    NestedBootstrap = 3,
}

const TAG_BITS: u32 = 4;

/// The stream for replicate `index` and purpose `tag` under `seed`.
pub fn substream(seed: u64, index: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << TAG_BITS) | tag as u64);
    rng
}

/// SplitMix64 finaliser, used to derive independent child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A child seed for replicate `index` and purpose `tag`.
pub fn derive_seed(seed: u64, index: u64, tag: StreamTag) -> u64 {
    mix64(mix64(seed ^ mix64(index)) ^ tag as u64)
}

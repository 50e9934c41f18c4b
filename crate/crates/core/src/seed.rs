//! Seed derivation.
//!
//! Every random draw in the crate is taken from a ChaCha stream whose seed is
//! derived from one master seed plus a fixed sequence of stream tags. Streams
//! never share state, so the draws of one stream do not depend on how many
//! values another stream consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an ordered list of tags.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(mix64(seed), |acc, &t| mix64(acc ^ mix64(t.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}

/// Order-independent identity key for one data row, used so that random
/// assignments follow units rather than row positions.
pub fn row_key(values: impl IntoIterator<Item = f64>) -> u64 {
    values
        .into_iter()
        .fold(0x243F_6A88_85A3_08D3, |acc, v| mix64(acc ^ v.to_bits()))
}

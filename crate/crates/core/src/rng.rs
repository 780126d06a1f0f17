//! Deterministic seeding.
//!
//! Every stochastic routine takes an explicit 64-bit seed and builds a
//! ChaCha8 stream from it, so results are bit-reproducible across
//! platforms and thread counts. Child seeds are derived with SplitMix64 so
//! that adding an experiment arm never shifts the randomness of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent seed with a stream index.
#[inline]
pub fn child_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// 64-bit FNV-1a; stable across Rust versions unlike `DefaultHasher`.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for run `run` of the arm named `label`:
/// `child_seed(child_seed(base, fnv1a(label)), run)`.
pub fn run_seed(base_seed: u64, label: &str, run: u64) -> u64 {
    child_seed(child_seed(base_seed, label_hash(label)), run)
}

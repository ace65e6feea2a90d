//! Named, independent seed streams.
//!
//! Every random choice in the engine draws from a stream derived from the run
//! seed, a stream name and optional coordinates, so components can be varied
//! independently without perturbing each other.

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of several words into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for the named stream `name` under run seed `seed`.
pub fn stream(seed: u64, name: &str) -> u64 {
    mix(&[seed, name_hash(name)])
}

pub const TRAIN_NEGATIVES: &str = "train-negatives";
pub const VALID_NEGATIVES: &str = "valid-negatives";
pub const TEST_NEGATIVES: &str = "test-negatives";
pub const INIT: &str = "init";
pub const SYNTHETIC: &str = "synthetic";
pub const NEIGHBOR_SAMPLING: &str = "neighbor-sampling";
pub const SHUFFLE: &str = "shuffle";

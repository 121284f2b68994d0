//! Seeded random streams.
//!
//! Every independent unit of work (one ego-network, one walk, one training
//! worker) draws from its own ChaCha stream keyed by the run seed and a small
//! tuple of indices, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a domain tag and a list of indices into one 64-bit key.
pub fn mix(seed: u64, tag: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(tag));
    for &k in keys {
        h = splitmix64(h ^ k.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    h
}

pub fn stream(seed: u64, tag: u64, keys: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix(seed, tag, keys))
}

/// Domain tags separating the streams of different stages.
pub mod tags {
    pub const EGO_CLUSTERING: u64 = 1;
    pub const WALK_ORDER: u64 = 2;
    pub const WALK: u64 = 3;
    pub const INIT: u64 = 4;
    pub const TRAIN: u64 = 5;
    pub const SPLIT: u64 = 6;
    pub const NEGATIVES: u64 = 7;
    pub const PIPELINE: u64 = 8;
}

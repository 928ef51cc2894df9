//! Seed derivation.
//!
//! Every random stream in a run comes from one master seed. A stream is named
//! by a path of integers (for example `[shuffle, phase, stream::CODES]`); its
//! seed is obtained by folding each path element into the master seed with a
//! SplitMix64 finalizer. Streams with different paths are independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named stream tags used across the crate.
pub mod stream {
    pub const SHUFFLE: u64 = 1;
    pub const CODES: u64 = 2;
    pub const CV: u64 = 3;
    pub const MLP_INIT: u64 = 4;
    pub const MLP_TRAIN: u64 = 5;
    pub const EXEMPLARS: u64 = 6;
    pub const EXPAND: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const SYNTH: u64 = 9;
    pub const RETRAIN: u64 = 10;
    pub const INCREMENTAL: u64 = 11;
    pub const MLP_Y: u64 = 12;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

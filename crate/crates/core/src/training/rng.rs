//! Seeded random streams: every consumer gets its own ChaCha stream keyed by
//! `(seed, stream id)`, so results do not depend on scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GENERATOR_STREAM: u64 = 1;
pub const PROBE_STREAM: u64 = 2;
pub const DATASET_STREAM: u64 = 3;
pub const INIT_STREAM: u64 = 4;
pub const SHUFFLE_STREAM: u64 = 5;
pub const EXPERIMENT_STREAM: u64 = 6;
pub const VERIFY_STREAM: u64 = 7;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id built from a tag and two small indices.
pub fn stream_id(tag: u64, a: u64, b: u64) -> u64 {
    (tag << 48) ^ ((a & 0xFF_FFFF) << 24) ^ (b & 0xFF_FFFF)
}

/// Child seed for a sub-task.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a master
//! seed and selected by a stream counter, so the stream for tree `b` or
//! realization `r` does not depend on how work is scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Name recorded in output metadata.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha 0.9), normals via rand_distr ziggurat";

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First word of the `(seed, stream)` generator, used as a child seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

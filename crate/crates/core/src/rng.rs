//! Counter-addressed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and positioned at `(stream, block)`: the stream id selects an
//! independent ChaCha stream and the block selects a disjoint 2^32-word
//! window inside it. Results therefore do not depend on how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BLOCK_SHIFT: u32 = 32;

pub fn stream_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((block as u128) << BLOCK_SHIFT);
    rng
}

/// Derives a child seed so that distinct experiments sharing a user seed
/// do not reuse streams.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

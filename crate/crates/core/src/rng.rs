//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator seeded from the master seed and
//! placed on a 64-bit stream id built from `(replica, purpose)`. Two
//! streams with different keys never share keystream blocks, so results do
//! not depend on scheduling or on how many draws another stream made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// FNV-1a over the purpose tag; stable across platforms and compiler versions.
fn tag_hash(tag: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in tag.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Stream for `(master, replica, purpose)`.
pub fn stream(master: u64, replica: u32, purpose: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((u64::from(replica) << 32) | u64::from(tag_hash(purpose)));
    rng
}

/// Sub-stream for numbered work items inside one purpose, e.g. tile `k` of a
/// window or sample `k` of a verification batch.
pub fn substream(master: u64, replica: u32, purpose: &str, index: u64) -> StreamRng {
    stream(master ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15), replica, purpose)
}

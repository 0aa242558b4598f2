//! Seeded random streams.
//!
//! Every random draw goes through a ChaCha20 generator keyed by the user seed
//! and placed on a stream derived from a label, so independent consumers
//! (model tensors, probe states, sweep points) never share a sequence and the
//! result does not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stream_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for `(seed, label)`.
pub fn substream(seed: u64, label: &str) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(label));
    rng
}

//! Coordinate-indexed randomness: every stochastic draw in the simulator is a
//! pure function of (seed, stream tag, two coordinate indices), so results do
//! not depend on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha stream keyed by (seed, tag, a, b).
pub(crate) fn coordinate_rng(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed ^ tag);
    state = splitmix64(state ^ a);
    state = splitmix64(state ^ b);
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

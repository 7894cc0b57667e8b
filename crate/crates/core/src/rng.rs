//! Deterministic random substreams.
//!
//! A substream key is a master seed followed by any number of indices (cell,
//! replicate, purpose, ...). The key is folded through SplitMix64 into a
//! 32-byte ChaCha8 seed, so distinct keys give unrelated streams and the same
//! key always gives the same stream regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `(master, path...)` to a 64-bit value.
pub fn fold_key(master: u64, path: &[u64]) -> u64 {
    let mut state = master;
    let mut h = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(h);
        h = splitmix64(&mut state);
    }
    h
}

/// Independent stream for the key `(master, path...)`.
pub fn substream(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = fold_key(master, path);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

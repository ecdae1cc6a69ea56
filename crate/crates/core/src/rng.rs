//! Deterministic per-realization random streams.
//!
//! Every realization owns an independent ChaCha8 stream: the 256-bit key is
//! expanded from the master seed with SplitMix64 and the 64-bit stream id is
//! the realization index. Resampled realizations use ids with the top bit set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// One SplitMix64 step; also used as a 64-bit mixing hash.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(master_seed: u64) -> [u8; 32] {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Stream for `(master_seed, realization_index)`; `attempt > 0` selects the
/// stream used after a discarded (numerically degenerate) realization.
pub fn realization_stream(master_seed: u64, realization_index: u64, attempt: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(master_seed));
    let stream = if attempt == 0 {
        realization_index & !(1 << 63)
    } else {
        let mut h = realization_index ^ (u64::from(attempt) << 40);
        splitmix64(&mut h) | (1 << 63)
    };
    rng.set_stream(stream);
    rng
}

/// Stream for auxiliary sampling tasks (bootstrap, test fixtures).
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::from_seed(key_from_seed(seed))
}

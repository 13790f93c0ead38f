//! Reproducible random-number streams.
//!
//! Every stochastic routine in this crate derives its generator from a
//! user-supplied 64-bit seed plus structural indices (location-set number,
//! trial number, ...). Trials map to independent ChaCha streams, so results
//! are identical regardless of evaluation order or worker count.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 finalizer, used to decorrelate tagged seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a sequence of tags
/// (domain constants, set indices, ...). Order-sensitive.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(seed);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag));
    }
    state
}

/// Generator for one trial: the seed selects the keyed cipher, the trial
/// index selects an independent stream of it.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

//! Seeded substreams. Every rank-one term (or block pair) draws from its own
//! ChaCha stream keyed by `(seed, domain)` and indexed by the term, so a matrix
//! does not depend on assembly order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_TERM: u64 = 0x7465_726d;
pub(crate) const DOMAIN_PERTURB: u64 = 0x7065_7274;
pub(crate) const DOMAIN_EDGE: u64 = 0x6564_6765;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for item `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Master seed of Monte Carlo trial `trial`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut state = (seed ^ 0x7472_6961_6c73_0000).wrapping_add(trial.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(&mut state)
}

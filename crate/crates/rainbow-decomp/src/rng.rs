//! Seed plumbing. Every randomized routine takes an explicit `&mut Rng`;
//! trial `i` of a run with master seed `s` uses `trial_seed(s, i)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer applied to `master + (index+1) * golden`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child stream from a parent without disturbing
/// anything but one draw of the parent.
pub fn fork(rng: &mut Rng) -> Rng {
    use rand::RngCore;
    ChaCha8Rng::seed_from_u64(rng.next_u64())
}

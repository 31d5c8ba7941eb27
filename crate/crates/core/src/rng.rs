//! Seed derivation and the PRNG used for every randomized component.
//!
//! Sub-seeds are derived by folding a path of integers into the master seed
//! with the SplitMix64 finalizer (constants `0x9e3779b97f4a7c15`,
//! `0xbf58476d1ce4e5b9`, `0x94d049bb133111eb`). Streams come from
//! xoshiro256++ seeded through `seed_from_u64`.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TrialRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with an ordered coordinate path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master.wrapping_add(GOLDEN)), |state, &p| {
        mix64(state ^ mix64(p.wrapping_add(GOLDEN)).wrapping_add(GOLDEN))
    })
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

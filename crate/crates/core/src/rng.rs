//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value. Trial `i` of an experiment with base seed `s` uses
//! `s ^ mix64(i)`; independent consumers inside one trial (sampler,
//! adversary, label noise) salt the trial seed with a fixed constant
//! through [`substream`] so they never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer, a bijection on `u64`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(base: u64, trial: u64) -> u64 {
    base ^ mix64(trial)
}

pub fn substream(seed: u64, salt: u64) -> u64 {
    mix64(seed ^ mix64(salt))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) const SALT_ADVERSARY: u64 = 0xAD;
pub(crate) const SALT_LABELS: u64 = 0x1AB;
pub(crate) const SALT_SECOND: u64 = 0x2D;
pub(crate) const SALT_LEARNER: u64 = 0x1EA;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}

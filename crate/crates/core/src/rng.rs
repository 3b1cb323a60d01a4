//! Seed derivation for reproducible, worker-count independent randomness.
//!
//! Every stochastic consumer (an individual's evaluation, a grid run, a
//! trial) receives its own ChaCha stream whose seed is a pure function of a
//! parent seed and a short path of integer tags.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DecisionRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`; distinct tag paths give unrelated seeds.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn stream(seed: u64) -> DecisionRng {
    DecisionRng::seed_from_u64(seed)
}

pub fn derived_stream(seed: u64, tags: &[u64]) -> DecisionRng {
    stream(derive_seed(seed, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_path_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }

    #[test]
    fn streams_replay() {
        let a: Vec<u32> = derived_stream(3, &[4]).random_iter().take(8).collect();
        let b: Vec<u32> = derived_stream(3, &[4]).random_iter().take(8).collect();
        assert_eq!(a, b);
    }
}

//! Seed derivation shared by instance generation and run scheduling.
//!
//! Every random stream in the crate comes from a [`ChaCha8Rng`] whose seed is
//! a SplitMix64 fold over a list of integer keys, so results depend only on
//! the keys and never on scheduling or platform word size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type BenchRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into a single 64-bit seed. Order matters.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(words.len() as u64), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Hashes a string key (algorithm names and the like) into one word.
pub fn hash_str(s: &str) -> u64 {
    s.bytes()
        .fold(0xCBF2_9CE4_8422_2325_u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3))
}

pub fn rng_from_seed(seed: u64) -> BenchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

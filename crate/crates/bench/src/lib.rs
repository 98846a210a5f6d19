//! Shared inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nnlab_core::words::Word;

/// Deterministic i.i.d. stream over `1..=alphabet`.
pub fn random_stream(seed: u64, len: usize, alphabet: u64) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Word::new((0..len).map(|_| rng.gen_range(1..=alphabet)).collect()).expect("digits are positive")
}

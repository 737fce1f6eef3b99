//! Seed derivation.
//!
//! Every random quantity in the toolkit descends from one 64-bit root seed.
//! Replicate `r` of an experiment uses `derive_seed(root, r)`, which is the
//! `(r + 1)`-th output of a SplitMix64 generator started at `root`:
//!
//! ```text
//! z = root + (r + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! seed_r = z ^ (z >> 31)
//! ```
//!
//! Within one replicate, matrix entry `(i, j)` (upper triangle, row-major) reads
//! from ChaCha8 stream `i` at word offset `j * ENTRY_WORDS`, so entries can be
//! generated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 32-bit words reserved for each matrix entry in its row stream.
pub const ENTRY_WORDS: u128 = 64;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, index: u64) -> u64 {
    mix64(root.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replicate_rng(root: u64, index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(root, index))
}

/// Positions a row generator at the block reserved for column `col`.
pub(crate) fn seek_entry(row_rng: &mut ChaCha8Rng, col: usize) {
    row_rng.set_word_pos(col as u128 * ENTRY_WORDS);
}

pub(crate) fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(row as u64);
    rng
}

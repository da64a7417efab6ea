//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose seed is
//! derived from a user seed plus a tuple of integer keys (row index,
//! observable index, projection index, ...). Results therefore do not depend
//! on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and an ordered list of keys.
///
/// `derive_seed(s, &[a, b])` = splitmix(splitmix(splitmix(s) ^ a) ^ b).
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ k))
}

/// A ChaCha8 generator keyed by `(seed, keys...)`.
pub fn keyed_rng(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// The `row`-th draw from the uniform distribution on `[0, 1)^dim`.
pub fn uniform_input(seed: u64, row: u64, dim: usize) -> Vec<f64> {
    use rand::Rng;
    let mut rng = keyed_rng(seed, &[TAG_INPUT, row]);
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

// Domain tags keep streams used for different purposes apart even when the
// numeric keys coincide.
pub(crate) const TAG_INPUT: u64 = 0x0049_4e50_5554;
pub(crate) const TAG_SHOTS: u64 = 0x0053_484f_5453;
pub(crate) const TAG_NOISE: u64 = 0x004e_4f49_5345;
pub(crate) const TAG_PROJECTION: u64 = 0x5052_4f4a;
pub(crate) const TAG_INIT: u64 = 0x494e_4954;

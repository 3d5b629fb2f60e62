//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 (via
//! `rand_chacha`), seeded with a 64-bit value. ChaCha output is specified
//! bit-for-bit and does not depend on the platform, so masks and ground
//! truths are reproducible everywhere. Gaussian variates use the
//! `rand_distr` ziggurat sampler on top of that stream.
//!
//! Independent sub-streams (one per experiment cell, per seed, per sample)
//! are obtained with [`derive_seed`], a SplitMix64 finaliser over the
//! parent seed and the child index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::DenseMatrix;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DenseMatrix::from_vec_unchecked(rows, cols, data)
}

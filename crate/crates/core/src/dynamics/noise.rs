//! Counter-based randomness: every draw is a pure function of its indices,
//! so any scheduling of paths over threads sees the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub(crate) const NOISE_STREAM: u64 = 0x6e6f_6973_6500_0001;
pub(crate) const ATOM_STREAM: u64 = 0x6174_6f6d_7300_0002;
pub(crate) const POLICY_STREAM: u64 = 0x706f_6c69_6379_0003;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a tuple of counters into a single 64-bit key.
pub(crate) fn counter_key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub(crate) fn counter_rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(counter_key(parts))
}

/// Standard normal draw addressed by `(seed, path, step, coordinate)`.
pub fn gaussian_increment(seed: u64, path: u64, step: u64, coordinate: u64) -> f64 {
    let mut rng = counter_rng(&[NOISE_STREAM, seed, path, step, coordinate]);
    StandardNormal.sample(&mut rng)
}

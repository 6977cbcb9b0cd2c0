//! Splittable seeding: stream `i` of a run with seed `s` is a Xoshiro256++
//! generator keyed by a SplitMix64 hash of `(s, i)`, so any stream can be
//! regenerated without touching the others.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for stream `index` of run `seed`.
pub fn stream_rng(seed: u64, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c908)));
    StreamRng::seed_from_u64(key)
}

pub fn fill_normals<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for z in out {
        *z = rng.sample(StandardNormal);
    }
}

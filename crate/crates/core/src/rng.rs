//! Seeded random streams.
//!
//! Every randomized routine draws from a [`StreamRng`] obtained by
//! [`stream`]. Stream `i` of master seed `s` is seeded with
//! `splitmix64(s ^ splitmix64(i + φ))`, where φ is the 64-bit golden-ratio
//! constant. Work that is split into chunks uses one stream per chunk index,
//! so results do not depend on how chunks are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(GOLDEN)))
}

pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(split_seed(seed, index))
}

/// The only primitive the samplers need: a uniform index in `0..bound`.
///
/// Implemented for every [`RngCore`]; tests implement it with scripted
/// choices to enumerate a sampler's full decision tree.
pub trait IndexSource {
    fn index_below(&mut self, bound: usize) -> usize;
}

impl<R: RngCore + ?Sized> IndexSource for R {
    #[inline]
    fn index_below(&mut self, bound: usize) -> usize {
        self.gen_range(0..bound)
    }
}

//! Seeded random streams.
//!
//! Every random decision in the generator flows from a [`SeededRng`]. The
//! backing generator is ChaCha8, whose output stream is fixed by the seed and
//! stable across platforms and crate versions. Independent streams (one per
//! record, one per pipeline stage) are obtained with [`child_seed`], so the
//! output of a batch never depends on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Odd multiplier (2^64 / golden ratio) used to spread child indices.
const CHILD_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mixer on 64-bit words.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed: `mix64(seed ^ (index * CHILD_STRIDE))`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ index.wrapping_mul(CHILD_STRIDE))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh generator on the stream `child_seed(self.seed(), index)`.
    ///
    /// Does not advance `self`.
    pub fn child(&self, index: u64) -> SeededRng {
        SeededRng::new(child_seed(self.seed, index))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

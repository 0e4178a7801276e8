//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream, counter)`: streams are
//! keyed by entity (particle id, particle pair, initial sampling) and the
//! step index, so the values a particle sees never depend on how work is
//! scheduled across threads.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags occupy the top four bits of the stream key.
pub const TAG_INIT: u64 = 1 << 60;
pub const TAG_DIFFUSION: u64 = 2 << 60;
pub const TAG_PAIR: u64 = 3 << 60;
pub const TAG_COUNT: u64 = 4 << 60;

/// ChaCha8 keyed by the seed, on the given stream, starting at word
/// `step * 2^32`; each `(seed, stream, step)` owns 2^32 words.
#[derive(Debug, Clone)]
pub struct CounterRng {
    inner: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64, step: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(u128::from(step) << 32);
        Self { inner }
    }

    /// Stream for an unordered particle pair; ids must be below 2^30.
    pub fn pair_stream(a: u64, b: u64) -> u64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        debug_assert!(hi < 1 << 30);
        TAG_PAIR | (lo << 30) | hi
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.sample(Open01)
    }
}

impl RngCore for CounterRng {
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

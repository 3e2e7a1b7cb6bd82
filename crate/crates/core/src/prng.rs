//! Seeded, platform-independent random number generation.
//!
//! Every random draw in the crate (sketch signs, synthetic images, frozen
//! weights) goes through [`Prng`], a ChaCha8 stream keyed by a 64-bit seed.
//! ChaCha output is specified bit-for-bit, so the same seed yields the same
//! stream on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct Prng {
    seed: u64,
    rng: ChaCha8Rng,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this generator was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent generator for sub-stream `stream`.
    pub fn fork(&self, stream: u64) -> Prng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.wrapping_add(1));
        Prng {
            seed: self.seed,
            rng,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Fills `out` with fair-coin signs (+1.0 / -1.0).
    ///
    /// Sign `k` is bit `k % 64` (LSB first) of the `k / 64`-th 64-bit output;
    /// a set bit means `-1`.
    pub fn fill_signs(&mut self, out: &mut [f64]) {
        for chunk in out.chunks_mut(64) {
            let word = self.rng.next_u64();
            for (bit, v) in chunk.iter_mut().enumerate() {
                *v = if (word >> bit) & 1 == 1 { -1.0 } else { 1.0 };
            }
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

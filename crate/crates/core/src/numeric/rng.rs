//! Seeded, portable random streams.
//!
//! A [`RandomStream`] wraps ChaCha8 (the 8-round ChaCha stream cipher used as
//! a counter-based generator). The 64-bit seed is expanded to the 256-bit key
//! with `seed_from_u64` (PCG32 expansion, as documented by `rand_core`), and
//! independent substreams use ChaCha's 64-bit stream id. Given
//! `(seed, stream)` the output is bit-identical on every platform.
//!
//! Uniforms use the top 53 bits of each 64-bit word: `u = (w >> 11 + ½)·2⁻⁵³`,
//! which lies strictly inside (0, 1).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// A single-owner stream of pseudo-random numbers.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// The `index`-th independent substream of `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, stream: index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// Exponential draw with the given rate, by inverse transform.
    pub fn exp(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        -self.uniform().ln() / rate
    }

    /// Gamma(n, 1) draw as a sum of `n` unit exponentials.
    pub fn gamma_int(&mut self, n: u32) -> f64 {
        debug_assert!(n >= 1);
        (0..n).map(|_| self.exp(1.0)).sum()
    }
}

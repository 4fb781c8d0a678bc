//! Seeded random stream with a draw counter.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic stream: identical seeds give identical draw sequences.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    draws: u64,
    inner: ChaCha8Rng,
}

/// SplitMix64 finalizer, used to decorrelate consecutive trial seeds.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng { seed, draws: 0, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Stream for trial `index` of a run seeded with `base`: seeded with
    /// `mix_seed(base + index)`.
    pub fn for_trial(base: u64, index: u64) -> Self {
        Self::new(mix_seed(base.wrapping_add(index)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.draws += 1;
        self.inner.random_range(0..n)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.draws += 1;
        self.inner.random::<f64>()
    }

    /// Bernoulli(p).
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }
}

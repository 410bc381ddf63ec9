//! Deterministic pseudo-random streams.
//!
//! Every replication draws from its own stream, addressed by
//! `(master_seed, stream_index)`. Streams are ChaCha8 keyed by the master seed
//! with the index selecting the ChaCha stream, so replication `i` produces the
//! same draws no matter which replications ran before it or on which thread.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};

/// Single-owner pseudo-random stream.
#[derive(Debug, Clone)]
pub struct SeededStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

/// Derives the stream for replication `index` of an experiment seeded with
/// `master_seed`.
pub fn derive_stream(master_seed: u64, index: u64) -> SeededStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    SeededStream {
        master_seed,
        stream_index: index,
        rng,
    }
}

impl SeededStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Stream for replication `replication` of the experiment group this
    /// stream addresses. Groups and replications each get 32 bits of the
    /// index space.
    pub fn fork(&self, replication: u64) -> SeededStream {
        debug_assert!(replication < 1 << 32);
        derive_stream(
            self.master_seed,
            (self.stream_index << 32) | (replication & 0xffff_ffff),
        )
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Exponential draw with the given rate (mean `1/rate`).
    pub fn exponential(&mut self, rate: f64) -> f64 {
        Exp::new(rate)
            .expect("exponential rate must be positive")
            .sample(&mut self.rng)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn binomial(&mut self, n: u64, p: f64) -> u64 {
        Binomial::new(n, p)
            .expect("binomial probability in [0, 1]")
            .sample(&mut self.rng)
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

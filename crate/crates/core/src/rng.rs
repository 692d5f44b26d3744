//! Seeded random streams used by sampling and synthetic-case generation.
//!
//! Everything downstream of a seed must be reproducible bit-for-bit, so we
//! draw raw words from ChaCha8 and derive floats ourselves instead of going
//! through distribution crates whose internals may change between releases.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent substream; lets parallel consumers share one root seed.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeededRng(rng)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn usize_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.0.next_u64() % n as u64) as usize
    }

    /// Exp(1) draw via inverse CDF.
    pub fn exp1(&mut self) -> f64 {
        let u = self.uniform();
        -(1.0 - u).ln()
    }

    /// Dirichlet(1, ..., 1) weights over `n` entries: normalized Exp(1)
    /// draws. Uniform over the probability simplex, which is all the
    /// feasibility counters need (they test membership, not measure).
    pub fn dirichlet(&mut self, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| self.exp1()).collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return vec![1.0 / n as f64; n];
        }
        for v in &mut w {
            *v /= total;
        }
        w
    }

}

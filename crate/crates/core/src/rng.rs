//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`SeededRng`]: a
//! ChaCha8 stream keyed by a 64-bit seed. Normal variates come from the
//! ziggurat sampler in `rand_distr`. Child streams for parallel trials are
//! keyed by [`mix64`]`(master, index)`, so trial `t` draws the same numbers no
//! matter which thread runs it or in which order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Name of the generator backing [`SeededRng`].
pub const STREAM_ALGORITHM: &str = "chacha8+ziggurat";

/// SplitMix64 finalizer applied to `seed + (index + 1) * golden_gamma`.
///
/// Used to derive independent child seeds from a master seed.
pub fn mix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
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

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for child `index`, a pure function of `(seed, index)`.
    pub fn child(&self, index: u64) -> SeededRng {
        SeededRng::new(mix64(self.seed, index))
    }

    /// Draws a fresh 64-bit seed from this stream.
    pub fn next_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `[0, n)` by one 64-bit draw reduced modulo `n`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.inner.next_u64() % n as u64) as usize
    }

    /// `+1.0` or `-1.0` with equal probability, from the low bit of one draw.
    pub fn sign(&mut self) -> f64 {
        if self.inner.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn equal_seeds_equal_normals() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn children_are_pure_functions_of_index() {
        let master = SeededRng::new(9);
        let mut drained = master.clone();
        for _ in 0..17 {
            drained.normal();
        }
        let mut c1 = master.child(3);
        let mut c2 = drained.child(3);
        assert_eq!(c1.next_u64(), c2.next_u64());
        assert_ne!(mix64(9, 3), mix64(9, 4));
        assert_ne!(mix64(9, 3), mix64(10, 3));
    }

    #[test]
    fn normal_moments_over_a_million_draws() {
        let mut rng = SeededRng::new(2024);
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        // sd(mean) = 1/sqrt(n); sd(var) = sqrt(2/n)
        assert!(mean.abs() < 5.0 / libm::sqrt(n as f64), "mean {mean}");
        assert!((var - 1.0).abs() < 5.0 * libm::sqrt(2.0 / n as f64), "var {var}");
    }

    #[test]
    fn signs_and_buckets_in_range() {
        let mut rng = SeededRng::new(1);
        for _ in 0..1000 {
            let s = rng.sign();
            assert!(s == 1.0 || s == -1.0);
            assert!(rng.below(7) < 7);
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}

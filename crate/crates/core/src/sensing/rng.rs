//! Seeded randomness behind the SRM and ROT operators.
//!
//! This is part of the bitstream contract: a decoder must regenerate exactly
//! the permutations, selections and sign patterns the encoder used. The
//! generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`, with one ChaCha stream per purpose (see
//! [`Stream`]). Bounded integers are drawn from `next_u64` by rejection
//! (`x < floor(2^64 / n) * n`, then `x % n`), and sign bits from the top bit
//! of `next_u64`. Shuffles are Fisher-Yates from the last index down.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Stream {
    Permutation = 0,
    Selection = 1,
    Signs = 2,
    Mixing = 3,
}

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        Self(rng)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.0.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    pub fn sign(&mut self) -> f64 {
        if self.0.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            p.swap(i, j);
        }
        p
    }

    /// `k` distinct values from `pool`, without replacement, in draw order.
    pub fn choose(&mut self, mut pool: Vec<usize>, k: usize) -> Vec<usize> {
        assert!(k <= pool.len());
        let n = pool.len();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

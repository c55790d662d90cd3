//! Seeded, portable random stream.
//!
//! Backed by ChaCha8 (`rand_chacha`): the output sequence for a given seed is
//! fixed by the algorithm and independent of platform or word size. Child
//! streams use ChaCha's 64-bit stream id, so deriving one never consumes the
//! parent's draws.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Independent stream `id` under the same seed. `substream(s, 0)` is
    /// `new(s)`.
    pub fn substream(seed: u64, id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        RandomStream { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream seeded from this stream's next draw.
    pub fn fork(&mut self) -> RandomStream {
        RandomStream::new(self.rng.random())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// Permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }

    /// `rows × cols` matrix with i.i.d. entries uniform on `[lo, hi)`.
    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Result<Matrix> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(alloc::format!(
                "uniform range requires finite lo < hi, got [{lo}, {hi})"
            )));
        }
        let data = (0..rows * cols).map(|_| self.rng.random_range(lo..hi)).collect();
        Matrix::from_vec(rows, cols, data)
    }

    /// 0/1 matrix whose entries are independently 1 with probability `p_keep`.
    pub fn bernoulli_mask(&mut self, rows: usize, cols: usize, p_keep: f64) -> Result<Matrix> {
        if !(0.0..=1.0).contains(&p_keep) {
            return Err(Error::invalid(alloc::format!(
                "keep probability must lie in [0, 1], got {p_keep}"
            )));
        }
        let data = (0..rows * cols)
            .map(|_| if self.rng.random_bool(p_keep) { 1.0 } else { 0.0 })
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_range_is_respected() {
        let mut s = RandomStream::new(0);
        let m = s.uniform_matrix(20, 20, 0.0, 1e-9).unwrap();
        assert!(m.as_slice().iter().all(|&v| (0.0..1e-9).contains(&v)));
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = RandomStream::new(42).uniform_matrix(4, 5, -1.0, 1.0).unwrap();
        let b = RandomStream::new(42).uniform_matrix(4, 5, -1.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = RandomStream::new(43).uniform_matrix(4, 5, -1.0, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_mean_near_half() {
        let m = RandomStream::new(9).uniform_matrix(100, 100, 0.0, 1.0).unwrap();
        let mean = m.as_slice().iter().sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn rejects_empty_range() {
        assert!(RandomStream::new(0).uniform_matrix(1, 1, 1.0, 1.0).is_err());
        assert!(RandomStream::new(0).uniform_matrix(1, 1, 2.0, 1.0).is_err());
    }

    #[test]
    fn bernoulli_extremes_and_rate() {
        let mut s = RandomStream::new(5);
        assert!(s
            .bernoulli_mask(10, 10, 1.0)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 1.0));
        assert!(s
            .bernoulli_mask(10, 10, 0.0)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        let m = s.bernoulli_mask(100, 100, 0.5).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        let frac = m.as_slice().iter().sum::<f64>() / 10_000.0;
        assert!((0.45..=0.55).contains(&frac), "fraction {frac}");
        assert!(s.bernoulli_mask(1, 1, 1.5).is_err());
        assert!(s.bernoulli_mask(1, 1, -0.1).is_err());
    }

    #[test]
    fn streams_are_bitwise_reproducible() {
        let mut a = RandomStream::new(123);
        let mut b = RandomStream::new(123);
        for _ in 0..1000 {
            assert_eq!(a.next_f64().to_bits(), b.next_f64().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn substreams_differ_and_do_not_consume_parent() {
        let mut parent = RandomStream::new(1);
        let first = RandomStream::new(1).next_u64();
        let mut child = RandomStream::substream(1, 1);
        assert_ne!(child.next_u64(), first);
        assert_eq!(parent.next_u64(), first);
    }
}

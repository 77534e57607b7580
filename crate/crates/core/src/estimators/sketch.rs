//! Count-min sketch: a d x w counter matrix with one seeded hash function
//! per row. Point queries return the minimum matching counter, a one-sided
//! overestimate of the true frequency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CountMinSketch {
    width: usize,
    depth: usize,
    /// Row-major d x w counters.
    counters: Vec<u64>,
    /// One multiply-shift seed per row.
    seeds: Vec<u64>,
    total: u64,
}

impl CountMinSketch {
    pub fn new(width: usize, depth: usize, seed: u64) -> Result<CountMinSketch> {
        if width < 1 || depth < 1 {
            return Err(Error::InvalidParams(format!(
                "sketch width and depth must be >= 1, got {width}x{depth}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Odd multipliers give a usable multiply-shift family.
        let seeds = (0..depth).map(|_| rng.random::<u64>() | 1).collect();
        Ok(CountMinSketch {
            width,
            depth,
            counters: vec![0; width * depth],
            seeds,
            total: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn bucket(&self, row: usize, key: u64) -> usize {
        let mixed = self.seeds[row].wrapping_mul(key ^ 0x9e37_79b9_7f4a_7c15);
        ((mixed >> 32) as usize) % self.width
    }

    /// Adds one occurrence: each row's counter at h_i(key) is incremented.
    pub fn update(&mut self, key: u64) {
        for row in 0..self.depth {
            let b = self.bucket(row, key);
            self.counters[row * self.width + b] += 1;
        }
        self.total += 1;
    }

    /// Minimum counter over the rows at h_i(key).
    pub fn point(&self, key: u64) -> u64 {
        (0..self.depth)
            .map(|row| self.counters[row * self.width + self.bucket(row, key)])
            .min()
            .unwrap_or(0)
    }

    /// Counters selected by each row's hash for `key`, in row order.
    pub fn row_counters(&self, key: u64) -> Vec<u64> {
        (0..self.depth)
            .map(|row| self.counters[row * self.width + self.bucket(row, key)])
            .collect()
    }

    /// Sum of each row of counters; every row conserves the insert total.
    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.depth)
            .map(|row| self.counters[row * self.width..(row + 1) * self.width].iter().sum())
            .collect()
    }
}

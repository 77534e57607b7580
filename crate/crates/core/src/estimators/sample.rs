//! Row sampling: a seeded reservoir draw without replacement, scaled back up
//! by |R| / |R'| at estimation time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::SelectivityEstimate;
use crate::sql::PredicateExpr;
use crate::storage::Table;

#[derive(Debug, Clone, PartialEq)]
pub struct RowSample {
    /// Distinct row indices, ascending.
    indices: Vec<u32>,
    population: usize,
    seed: u64,
}

impl RowSample {
    /// Draws `rate * population` rows (at least one for non-empty tables)
    /// with a single reservoir pass.
    pub fn build(population: usize, rate: f64, seed: u64) -> Result<RowSample> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "sample rate must be in (0,1], got {rate}"
            )));
        }
        if population == 0 {
            return Ok(RowSample {
                indices: Vec::new(),
                population: 0,
                seed,
            });
        }
        let k = ((population as f64 * rate).round() as usize).clamp(1, population);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reservoir: Vec<u32> = (0..k as u32).collect();
        for i in k..population {
            let j = rng.random_range(0..=i);
            if j < k {
                reservoir[j] = i as u32;
            }
        }
        reservoir.sort_unstable();
        Ok(RowSample {
            indices: reservoir,
            population,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Counts sample rows satisfying `pred` and scales by |R| / |R'|.
    pub fn estimate(&self, pred: &PredicateExpr, table: &Table) -> SelectivityEstimate {
        if self.indices.is_empty() {
            return SelectivityEstimate::zero();
        }
        let hits = self
            .indices
            .iter()
            .filter(|&&i| pred.matches_row(table, i as usize))
            .count();
        let scale = self.population as f64 / self.indices.len() as f64;
        SelectivityEstimate::from_cardinality(hits as f64 * scale, self.population as f64, false)
    }
}

//! Equi-width and equi-depth histograms over numeric columns.

use std::collections::HashSet;

use crate::sql::CmpOp;

/// Buckets of uniform width spanning [min, max].
#[derive(Debug, Clone, PartialEq)]
pub struct EquiWidthHistogram {
    min: f64,
    max: f64,
    width: f64,
    counts: Vec<u64>,
    distincts: Vec<u64>,
    total: u64,
}

impl EquiWidthHistogram {
    pub fn build(values: &[f64], buckets: usize) -> EquiWidthHistogram {
        assert!(buckets >= 1);
        if values.is_empty() {
            return EquiWidthHistogram {
                min: 0.0,
                max: 0.0,
                width: 0.0,
                counts: vec![0; buckets],
                distincts: vec![0; buckets],
                total: 0,
            };
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / buckets as f64;
        let mut counts = vec![0u64; buckets];
        let mut sets: Vec<HashSet<u64>> = vec![HashSet::new(); buckets];
        let index = |v: f64| -> usize {
            if width == 0.0 {
                0
            } else {
                (((v - min) / width) as usize).min(buckets - 1)
            }
        };
        for &v in values {
            let b = index(v);
            counts[b] += 1;
            sets[b].insert(v.to_bits());
        }
        EquiWidthHistogram {
            min,
            max,
            width,
            counts,
            distincts: sets.iter().map(|s| s.len() as u64).collect(),
            total: values.len() as u64,
        }
    }

    pub fn bucket_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn bucket_of(&self, value: f64) -> Option<usize> {
        if self.total == 0 || value < self.min || value > self.max {
            return None;
        }
        Some(if self.width == 0.0 {
            0
        } else {
            (((value - self.min) / self.width) as usize).min(self.counts.len() - 1)
        })
    }

    /// Rows in the value's bucket divided by the bucket's distinct count;
    /// zero for values outside [min, max].
    pub fn estimate_equality(&self, value: f64) -> f64 {
        match self.bucket_of(value) {
            Some(b) if self.distincts[b] > 0 => self.counts[b] as f64 / self.distincts[b] as f64,
            _ => 0.0,
        }
    }

    pub fn estimate_range(&self, op: CmpOp, value: f64) -> f64 {
        let bounds = |b: usize| -> (f64, f64) {
            (
                self.min + self.width * b as f64,
                if b + 1 == self.counts.len() {
                    self.max
                } else {
                    self.min + self.width * (b + 1) as f64
                },
            )
        };
        estimate_range(
            self.total,
            self.counts.len(),
            &|b| (bounds(b).0, bounds(b).1, self.counts[b]),
            op,
            value,
        )
    }
}

/// Buckets holding the same number of rows: depth D = ceil(T/B), the last
/// bucket may be smaller.
#[derive(Debug, Clone, PartialEq)]
pub struct EquiDepthHistogram {
    /// Per bucket: inclusive (low, high) value bounds.
    bounds: Vec<(f64, f64)>,
    counts: Vec<u64>,
    distincts: Vec<u64>,
    depth: u64,
    total: u64,
}

impl EquiDepthHistogram {
    pub fn build(values: &[f64], buckets: usize) -> EquiDepthHistogram {
        assert!(buckets >= 1);
        let total = values.len() as u64;
        if values.is_empty() {
            return EquiDepthHistogram {
                bounds: Vec::new(),
                counts: Vec::new(),
                distincts: Vec::new(),
                depth: 0,
                total: 0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let depth = (total as usize).div_ceil(buckets).max(1);
        let mut bounds = Vec::new();
        let mut counts = Vec::new();
        let mut distincts = Vec::new();
        for chunk in sorted.chunks(depth) {
            bounds.push((chunk[0], *chunk.last().expect("non-empty chunk")));
            counts.push(chunk.len() as u64);
            let set: HashSet<u64> = chunk.iter().map(|v| v.to_bits()).collect();
            distincts.push(set.len() as u64);
        }
        EquiDepthHistogram {
            bounds,
            counts,
            distincts,
            depth: depth as u64,
            total,
        }
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn bucket_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bucket_distincts(&self) -> &[u64] {
        &self.distincts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// D / V(b_x) for the bucket containing the value; zero when the value
    /// falls outside every bucket.
    pub fn estimate_equality(&self, value: f64) -> f64 {
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if value >= lo && value <= hi {
                if self.distincts[i] == 0 {
                    return 0.0;
                }
                return self.depth as f64 / self.distincts[i] as f64;
            }
        }
        0.0
    }

    pub fn estimate_range(&self, op: CmpOp, value: f64) -> f64 {
        estimate_range(
            self.total,
            self.counts.len(),
            &|b| (self.bounds[b].0, self.bounds[b].1, self.counts[b]),
            op,
            value,
        )
    }
}

/// Shared range estimator: full buckets inside the range count whole, the
/// bucket containing the boundary is linearly interpolated.
fn estimate_range(
    total: u64,
    buckets: usize,
    bucket: &dyn Fn(usize) -> (f64, f64, u64),
    op: CmpOp,
    value: f64,
) -> f64 {
    if total == 0 {
        return 0.0;
    }
    // Rows with value < x (strict) or <= x (inclusive).
    let below = |x: f64, inclusive: bool| -> f64 {
        let mut rows = 0.0;
        for b in 0..buckets {
            let (lo, hi, count) = bucket(b);
            if count == 0 {
                continue;
            }
            if hi < x || (inclusive && hi == x) {
                rows += count as f64;
            } else if lo > x || (!inclusive && lo >= x) {
                // Entirely at or above the boundary.
            } else if hi > lo {
                rows += count as f64 * ((x - lo) / (hi - lo));
            } else if inclusive {
                // Degenerate single-value bucket equal to x.
                rows += count as f64;
            }
        }
        rows
    };
    let rows = match op {
        CmpOp::Lt => below(value, false),
        CmpOp::Le => below(value, true),
        CmpOp::Gt => total as f64 - below(value, true),
        CmpOp::Ge => total as f64 - below(value, false),
        CmpOp::Eq => unreachable!("equality handled separately"),
    };
    rows.clamp(0.0, total as f64)
}

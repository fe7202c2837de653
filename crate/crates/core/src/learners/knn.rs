//! Brute-force k-nearest-neighbour voting on standardized rows.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnParams {
    pub n_neighbors: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { n_neighbors: 5 }
    }
}

/// Stored (already standardized) training rows and their labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orders by distance, then by row index, so equal distances resolve to the
/// earlier training row.
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnModel {
    /// Indices of the `k` nearest rows, nearest first.
    pub fn neighbors(&self, z: &[f64], k: usize) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, z), i))
            .collect();
        let k = k.min(dist.len());
        if k == 0 {
            return Vec::new();
        }
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_distance_then_index);
            dist.truncate(k);
        }
        dist.sort_unstable_by(by_distance_then_index);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    /// Fraction of the `k` neighbours labeled 1.
    pub fn proba(&self, z: &[f64], k: usize) -> f64 {
        let nn = self.neighbors(z, k);
        let ones = nn.iter().filter(|&&i| self.labels[i] == 1).count();
        ones as f64 / nn.len() as f64
    }
}

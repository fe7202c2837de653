//! Bagged ensemble of Gini trees with per-split feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Growth, SortedColumns, TreeModel};

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub n_estimators: usize,
    /// Overrides the seed passed to `fit` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Draw a size-n bootstrap per tree. Disabling it is a test hook.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub bootstrap: bool,
    /// Features examined per split; defaults to `ceil(sqrt(d))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            max_depth: None,
            min_samples_leaf: 1,
            n_estimators: 100,
            seed: None,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub seeds: Vec<u64>,
}

impl ForestModel {
    pub fn proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn default_max_features(d: usize) -> usize {
    (d as f64).sqrt().ceil() as usize
}

/// Per-tree seeds drawn from a generator seeded with `seed`.
pub fn tree_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

pub(crate) fn fit(
    rows: &[Vec<f64>],
    labels: &[u8],
    params: &ForestParams,
    seed: u64,
) -> ForestModel {
    let data = SortedColumns::new(rows, labels);
    let n = labels.len();
    let d = data.dim();
    let growth = Growth {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: Some(params.max_features.unwrap_or_else(|| default_max_features(d)).clamp(1, d)),
    };
    let seeds = tree_seeds(params.seed.unwrap_or(seed), params.n_estimators);
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut weights = vec![0u32; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1);
            }
            grow(&data, &weights, growth, &mut rng)
        })
        .collect();
    ForestModel { trees, seeds }
}

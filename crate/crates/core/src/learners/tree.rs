//! CART-style binary classification tree grown greedily on Gini impurity.
//!
//! Rows may carry integer multiplicities (bootstrap counts); a row with
//! multiplicity 3 behaves exactly like three identical rows. Each feature
//! keeps its own sorted index list which is stably partitioned at every
//! split, so no node ever re-sorts.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// `[p(class 0), p(class 1)]`
        fractions: [f64; 2],
        samples: usize,
    },
}

/// Flat node list; node 0 is the root. Rows with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        match self.leaf_for(x) {
            Node::Leaf { fractions, .. } => fractions[1],
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural sanity: child ids in range, features below `dim`.
    pub(crate) fn validate(&self, dim: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if *feature >= dim {
                        return Err(format!("node {i} splits on feature {feature} of {dim}"));
                    }
                    if *left >= self.nodes.len() || *right >= self.nodes.len() || *left <= i || *right <= i
                    {
                        return Err(format!("node {i} has invalid children"));
                    }
                }
                Node::Leaf { fractions, .. } => {
                    if (fractions[0] + fractions[1] - 1.0).abs() > 1e-9 {
                        return Err(format!("leaf {i} fractions do not sum to 1"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Column-major training data with each column's row order presorted.
pub struct SortedColumns<'a> {
    pub(crate) cols: Vec<Vec<f64>>,
    pub(crate) order: Vec<Vec<u32>>,
    pub(crate) labels: &'a [u8],
}

impl<'a> SortedColumns<'a> {
    pub fn new(rows: &[Vec<f64>], labels: &'a [u8]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let cols: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        SortedColumns { cols, order, labels }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }
}

/// Growth controls shared by single trees and forest members.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Growth {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

struct Task {
    id: usize,
    start: usize,
    end: usize,
    depth: usize,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

/// Grows a tree. `weights[i]` is the multiplicity of row `i` (0 excludes
/// it). `rng` is consulted only when `growth.max_features` is set.
pub(crate) fn grow<R: Rng>(
    data: &SortedColumns<'_>,
    weights: &[u32],
    growth: Growth,
    rng: &mut R,
) -> TreeModel {
    let d = data.dim();
    let msl = growth.min_samples_leaf.max(1) as f64;
    let mut order: Vec<Vec<u32>> = data
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&i| weights[i as usize] > 0).collect())
        .collect();
    let active = order.first().map_or(0, Vec::len);
    let mut goes_left = vec![false; data.n_rows()];
    let mut scratch: Vec<u32> = Vec::with_capacity(active);
    let mut features: Vec<usize> = (0..d).collect();
    let mut candidates = Vec::with_capacity(d);

    let mut nodes = vec![Node::Leaf {
        fractions: [1.0, 0.0],
        samples: 0,
    }];
    let mut stack = vec![Task {
        id: 0,
        start: 0,
        end: active,
        depth: 0,
    }];

    while let Some(task) = stack.pop() {
        let members = match order.first() {
            Some(o) => &o[task.start..task.end],
            None => &[][..],
        };
        let mut counts = [0.0f64; 2];
        for &i in members {
            counts[data.labels[i as usize] as usize] += f64::from(weights[i as usize]);
        }
        let total = counts[0] + counts[1];
        let p1 = if total > 0.0 { counts[1] / total } else { 0.0 };
        let leaf = Node::Leaf {
            fractions: [1.0 - p1, p1],
            samples: total as usize,
        };
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        let depth_capped = growth.max_depth.is_some_and(|m| task.depth >= m);
        if pure || depth_capped || total < 2.0 * msl {
            nodes[task.id] = leaf;
            continue;
        }

        // candidate features for this node
        candidates.clear();
        match growth.max_features {
            None => candidates.extend(0..d),
            Some(m) => {
                features.shuffle(rng);
                for &f in &features {
                    if candidates.len() == m {
                        break;
                    }
                    let o = &order[f][task.start..task.end];
                    let col = &data.cols[f];
                    if col[o[0] as usize] < col[o[o.len() - 1] as usize] {
                        candidates.push(f);
                    }
                }
                candidates.sort_unstable();
            }
        }

        let mut best: Option<BestSplit> = None;
        for &f in &candidates {
            let o = &order[f][task.start..task.end];
            let col = &data.cols[f];
            let mut left = [0.0f64; 2];
            for k in 0..o.len() - 1 {
                let i = o[k] as usize;
                left[data.labels[i] as usize] += f64::from(weights[i]);
                let here = col[i];
                let next = col[o[k + 1] as usize];
                if next <= here {
                    continue;
                }
                let wl = left[0] + left[1];
                let wr = total - wl;
                if wl < msl || wr < msl {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                // maximizing this minimizes the weighted child Gini impurity
                let score = (left[0] * left[0] + left[1] * left[1]) / wl
                    + (right[0] * right[0] + right[1] * right[1]) / wr;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(BestSplit {
                        score,
                        feature: f,
                        threshold,
                    });
                }
            }
        }

        let Some(split) = best else {
            nodes[task.id] = leaf;
            continue;
        };

        let col = &data.cols[split.feature];
        for &i in members {
            goes_left[i as usize] = col[i as usize] <= split.threshold;
        }
        let mut n_left = 0;
        for o in order.iter_mut() {
            let slice = &mut o[task.start..task.end];
            scratch.clear();
            let mut w = 0;
            for k in 0..slice.len() {
                let i = slice[k];
                if goes_left[i as usize] {
                    slice[w] = i;
                    w += 1;
                } else {
                    scratch.push(i);
                }
            }
            slice[w..].copy_from_slice(&scratch);
            n_left = w;
        }

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(leaf.clone());
        nodes.push(leaf);
        nodes[task.id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
        };
        let mid = task.start + n_left;
        stack.push(Task {
            id: right_id,
            start: mid,
            end: task.end,
            depth: task.depth + 1,
        });
        stack.push(Task {
            id: left_id,
            start: task.start,
            end: mid,
            depth: task.depth + 1,
        });
    }
    TreeModel { nodes }
}

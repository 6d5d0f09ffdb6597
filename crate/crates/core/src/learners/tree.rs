//! CART binary classification tree with weighted Gini splits.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Number of features sampled at each split.
    pub n_feature_sub: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Weighted class mass seen at the leaf.
        class_weights: [f64; 2],
        probabilities: [f64; 2],
    },
}

impl TreeNode {
    pub fn predict_proba(&self, row: &[f64]) -> [f64; 2] {
        match self {
            TreeNode::Leaf { probabilities, .. } => *probabilities,
            TreeNode::Split {
                feature_index,
                threshold,
                left,
                right,
                ..
            } => {
                if row[*feature_index] < *threshold {
                    left.predict_proba(row)
                } else {
                    right.predict_proba(row)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

fn leaf(indices: &[usize], labels: &[usize], weights: &[f64]) -> TreeNode {
    let mut class_weights = [0.0; 2];
    for &i in indices {
        class_weights[labels[i]] += weights[i];
    }
    let total: f64 = class_weights.iter().sum();
    let probabilities = if total > 0.0 {
        [class_weights[0] / total, class_weights[1] / total]
    } else {
        [0.5, 0.5]
    };
    TreeNode::Leaf {
        class_weights,
        probabilities,
    }
}

fn gini(class_weights: [f64; 2]) -> f64 {
    let total = class_weights[0] + class_weights[1];
    if total <= 0.0 {
        return 0.0;
    }
    let p0 = class_weights[0] / total;
    let p1 = class_weights[1] / total;
    1.0 - p0 * p0 - p1 * p1
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Weighted-impurity-decrease split search over a feature subset.
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values. Deterministic tie-break: the first (lowest feature index, lowest
/// threshold) best split wins.
fn best_split<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    indices: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> Option<BestSplit> {
    let n_features = rows[0].len();
    let mut feature_pool: Vec<usize> = (0..n_features).collect();
    let subset: Vec<usize> = if params.n_feature_sub >= n_features {
        feature_pool
    } else {
        feature_pool.shuffle(rng);
        let mut chosen: Vec<usize> = feature_pool[..params.n_feature_sub].to_vec();
        chosen.sort_unstable();
        chosen
    };

    let mut parent = [0.0; 2];
    for &i in indices {
        parent[labels[i]] += weights[i];
    }
    let parent_impurity = gini(parent) * (parent[0] + parent[1]);

    let mut best: Option<BestSplit> = None;
    let mut sorted = indices.to_vec();
    for &f in &subset {
        sorted.sort_by(|&a, &b| rows[a][f].partial_cmp(&rows[b][f]).unwrap());
        let mut left = [0.0; 2];
        let mut left_count = 0usize;
        for pos in 0..sorted.len() - 1 {
            let i = sorted[pos];
            left[labels[i]] += weights[i];
            left_count += 1;
            let value = rows[i][f];
            let next = rows[sorted[pos + 1]][f];
            if next <= value {
                continue; // not a boundary between distinct values
            }
            let right_count = sorted.len() - left_count;
            if left_count < params.min_samples_leaf || right_count < params.min_samples_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            // Zero-gain splits stay eligible so locally uninformative
            // boundaries (e.g. the first cut of an XOR layout) can still be
            // refined below.
            let gain = (parent_impurity
                - gini(left) * (left[0] + left[1])
                - gini(right) * (right[0] + right[1]))
                .max(0.0);
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (value + next),
                    gain,
                });
            }
        }
    }
    best
}

fn grow<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    indices: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> TreeNode {
    let pure = indices.iter().all(|&i| labels[i] == labels[indices[0]]);
    if pure || depth >= params.max_depth || indices.len() < params.min_samples_split {
        return leaf(&indices, labels, weights);
    }
    let split = match best_split(rows, labels, weights, &indices, params, rng) {
        Some(s) => s,
        None => return leaf(&indices, labels, weights),
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| rows[i][split.feature] < split.threshold);
    let left = grow(rows, labels, weights, left_idx, depth + 1, params, rng);
    let right = grow(rows, labels, weights, right_idx, depth + 1, params, rng);
    TreeNode::Split {
        feature_index: split.feature,
        threshold: split.threshold,
        gain: split.gain,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Train a single CART tree on weighted rows.
pub fn train_tree<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let total_weight: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || total_weight <= 0.0 {
        return Err(Error::InvalidConfig(
            "weights must be nonnegative with positive sum".into(),
        ));
    }
    let indices: Vec<usize> = (0..rows.len()).collect();
    Ok(grow(rows, labels, weights, indices, 0, params, rng))
}

//! Second-order gradient-boosted regression trees for logistic loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_estimators: 100,
            max_depth: 5,
            learning_rate: 0.1,
            subsample: 0.8,
            colsample_bytree: 0.8,
            reg_alpha: 0.1,
            reg_lambda: 1.0,
            gamma: 1.0,
            seed: 0,
        }
    }
}

impl BoostConfig {
    fn validate(&self) -> Result<()> {
        if !(self.subsample > 0.0 && self.subsample <= 1.0)
            || !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0)
        {
            return Err(Error::InvalidConfig(
                "sampling fractions must lie in (0, 1]".into(),
            ));
        }
        if self.reg_alpha < 0.0 || self.reg_lambda < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidConfig("regularizers must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RegNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
    Leaf {
        value: f64,
    },
}

impl RegNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            RegNode::Leaf { value } => *value,
            RegNode::Split {
                feature_index,
                threshold,
                left,
                right,
            } => {
                if row[*feature_index] < *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Prior log-odds the additive model starts from.
    pub base_score: f64,
    pub trees: Vec<RegNode>,
    pub n_features: usize,
    pub config: BoostConfig,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl GbdtModel {
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut f = self.base_score;
        for tree in &self.trees {
            f += self.config.learning_rate * tree.predict(row);
        }
        Ok(f)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; 2]> {
        let p = sigmoid(self.decision(row)?);
        Ok([1.0 - p, p])
    }
}

/// L1-soft-thresholded Newton leaf: -sign(G) max(|G| - alpha, 0) / (H + lambda).
fn leaf_value(g: f64, h: f64, config: &BoostConfig) -> f64 {
    let shrunk = (g.abs() - config.reg_alpha).max(0.0);
    if shrunk == 0.0 {
        0.0
    } else {
        -g.signum() * shrunk / (h + config.reg_lambda)
    }
}

fn score(g: f64, h: f64, config: &BoostConfig) -> f64 {
    let shrunk = (g.abs() - config.reg_alpha).max(0.0);
    shrunk * shrunk / (h + config.reg_lambda)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

fn best_reg_split(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    features: &[usize],
    config: &BoostConfig,
) -> Option<SplitChoice> {
    let g_total: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h_total: f64 = indices.iter().map(|&i| hess[i]).sum();
    let parent_score = score(g_total, h_total, config);

    let mut best: Option<(f64, SplitChoice)> = None;
    let mut sorted = indices.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| rows[a][f].partial_cmp(&rows[b][f]).unwrap());
        let mut g_left = 0.0;
        let mut h_left = 0.0;
        for pos in 0..sorted.len() - 1 {
            let i = sorted[pos];
            g_left += grad[i];
            h_left += hess[i];
            let value = rows[i][f];
            let next = rows[sorted[pos + 1]][f];
            if next <= value {
                continue;
            }
            let gain = 0.5
                * (score(g_left, h_left, config)
                    + score(g_total - g_left, h_total - h_left, config)
                    - parent_score)
                - config.gamma;
            if gain <= 0.0 {
                continue;
            }
            if best.as_ref().map_or(true, |(bg, _)| gain > *bg) {
                best = Some((
                    gain,
                    SplitChoice {
                        feature: f,
                        threshold: 0.5 * (value + next),
                    },
                ));
            }
        }
    }
    best.map(|(_, choice)| choice)
}

fn grow_reg(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: Vec<usize>,
    depth: usize,
    features: &[usize],
    config: &BoostConfig,
) -> RegNode {
    let make_leaf = |indices: &[usize]| {
        let g: f64 = indices.iter().map(|&i| grad[i]).sum();
        let h: f64 = indices.iter().map(|&i| hess[i]).sum();
        RegNode::Leaf {
            value: leaf_value(g, h, config),
        }
    };
    if depth >= config.max_depth || indices.len() < 2 {
        return make_leaf(&indices);
    }
    let split = match best_reg_split(rows, grad, hess, &indices, features, config) {
        Some(s) => s,
        None => return make_leaf(&indices),
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| rows[i][split.feature] < split.threshold);
    RegNode::Split {
        feature_index: split.feature,
        threshold: split.threshold,
        left: Box::new(grow_reg(
            rows, grad, hess, left_idx, depth + 1, features, config,
        )),
        right: Box::new(grow_reg(
            rows, grad, hess, right_idx, depth + 1, features, config,
        )),
    }
}

/// Train the boosted model on binary labels.
pub fn train_gbdt(rows: &[Vec<f64>], labels: &[usize], config: &BoostConfig) -> Result<GbdtModel> {
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    config.validate()?;
    let n = rows.len();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClassTrainingSet);
    }
    let d = rows[0].len();
    let prior = positives as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let n_sub = ((config.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols = ((config.colsample_bytree * d as f64).round() as usize).clamp(1, d);

    let mut scores: Vec<f64> = vec![base_score; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    for round in 0..config.n_estimators {
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - labels[i] as f64;
            hess[i] = p * (1.0 - p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[round as u64]));
        let row_sample: Vec<usize> = if n_sub < n {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let mut chosen = all[..n_sub].to_vec();
            chosen.sort_unstable();
            chosen
        } else {
            (0..n).collect()
        };
        let col_sample: Vec<usize> = if n_cols < d {
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(&mut rng);
            let mut chosen = all[..n_cols].to_vec();
            chosen.sort_unstable();
            chosen
        } else {
            (0..d).collect()
        };
        let tree = grow_reg(rows, &grad, &hess, row_sample, 0, &col_sample, config);
        for i in 0..n {
            scores[i] += config.learning_rate * tree.predict(&rows[i]);
        }
        trees.push(tree);
    }
    Ok(GbdtModel {
        base_score,
        trees,
        n_features: d,
        config: config.clone(),
    })
}

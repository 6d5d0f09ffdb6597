//! Bagged decision-tree ensemble with balanced class weights.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_tree, TreeNode, TreeParams};
use super::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// ceil(sqrt(d)) features per split.
    Sqrt,
    All,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub balanced_class_weight: bool,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 200,
            max_depth: 10,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 5,
            min_samples_leaf: 2,
            balanced_class_weight: true,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Average of per-tree leaf probability vectors.
    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; 2]> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut acc = [0.0; 2];
        for tree in &self.trees {
            let p = tree.predict_proba(row);
            acc[0] += p[0];
            acc[1] += p[1];
        }
        let n = self.trees.len() as f64;
        Ok([acc[0] / n, acc[1] / n])
    }
}

/// Train the bagged ensemble. Balanced class weights w(c) = n / (2 n_c) are
/// attached per sample before bootstrapping, so resampled weights travel
/// with their rows.
pub fn train_random_forest(
    rows: &[Vec<f64>],
    labels: &[usize],
    config: &ForestConfig,
) -> Result<ForestModel> {
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let n = rows.len();
    let counts = [
        labels.iter().filter(|&&l| l == 0).count(),
        labels.iter().filter(|&&l| l == 1).count(),
    ];
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClassTrainingSet);
    }
    let class_weight = if config.balanced_class_weight {
        [
            n as f64 / (2.0 * counts[0] as f64),
            n as f64 / (2.0 * counts[1] as f64),
        ]
    } else {
        [1.0, 1.0]
    };
    let base_weights: Vec<f64> = labels.iter().map(|&l| class_weight[l]).collect();

    let d = rows[0].len();
    let params = TreeParams {
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        min_samples_leaf: config.min_samples_leaf,
        n_feature_sub: match config.max_features {
            MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
            MaxFeatures::All => d,
        },
    };

    // Each tree owns a generator derived from (seed, tree index), so results
    // do not depend on scheduling.
    let trees: Vec<Result<TreeNode>> = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[t as u64]));
            let (sample_rows, sample_labels, sample_weights) = if config.bootstrap {
                let mut rs = Vec::with_capacity(n);
                let mut ls = Vec::with_capacity(n);
                let mut ws = Vec::with_capacity(n);
                for _ in 0..n {
                    let i = rng.gen_range(0..n);
                    rs.push(rows[i].clone());
                    ls.push(labels[i]);
                    ws.push(base_weights[i]);
                }
                (rs, ls, ws)
            } else {
                (rows.to_vec(), labels.to_vec(), base_weights.clone())
            };
            train_tree(&sample_rows, &sample_labels, &sample_weights, &params, &mut rng)
        })
        .collect();

    let trees = trees.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        n_features: d,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn blobs(n_per: usize, margin: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2usize {
            let center = if c == 0 { 0.0 } else { margin };
            for _ in 0..n_per {
                rows.push(vec![
                    center + rng.gen_range(-0.5..0.5),
                    center + rng.gen_range(-0.5..0.5),
                ]);
                labels.push(c);
            }
        }
        (rows, labels)
    }

    #[test]
    fn separable_blobs_perfect_heldout_accuracy() {
        // Margin of 5 sigma between blob centers.
        let (train_rows, train_labels) = blobs(100, 5.0, 1);
        let (test_rows, test_labels) = blobs(50, 5.0, 2);
        let model = train_random_forest(
            &train_rows,
            &train_labels,
            &ForestConfig {
                n_estimators: 50,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        for (row, &label) in test_rows.iter().zip(&test_labels) {
            let p = model.predict_proba(row).unwrap();
            let predicted = if p[1] > p[0] { 1 } else { 0 };
            assert_eq!(predicted, label);
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let (rows, labels) = blobs(80, 2.0, 7);
        let config = ForestConfig {
            n_estimators: 40,
            seed: 11,
            ..Default::default()
        };
        let a = train_random_forest(&rows, &labels, &config).unwrap();
        let b = train_random_forest(&rows, &labels, &config).unwrap();
        for row in &rows {
            assert_eq!(a.predict_proba(row).unwrap(), b.predict_proba(row).unwrap());
        }
    }

    #[test]
    fn determinism_across_thread_counts() {
        let (rows, labels) = blobs(60, 2.0, 5);
        let config = ForestConfig {
            n_estimators: 16,
            seed: 2,
            ..Default::default()
        };
        let reference = train_random_forest(&rows, &labels, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| train_random_forest(&rows, &labels, &config).unwrap());
        for row in &rows {
            assert_eq!(
                reference.predict_proba(row).unwrap(),
                single.predict_proba(row).unwrap()
            );
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![0.0], vec![1.0]];
        let labels = vec![1, 1];
        assert!(matches!(
            train_random_forest(&rows, &labels, &ForestConfig::default()),
            Err(Error::SingleClassTrainingSet)
        ));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (rows, labels) = blobs(50, 1.0, 9);
        let model = train_random_forest(
            &rows,
            &labels,
            &ForestConfig {
                n_estimators: 25,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for row in &rows {
            let p = model.predict_proba(row).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (rows, labels) = blobs(30, 3.0, 4);
        let model = train_random_forest(
            &rows,
            &labels,
            &ForestConfig {
                n_estimators: 5,
                seed: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            model.predict_proba(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }
}

//! Two-hidden-layer feed-forward network with dropout, Adam, and early
//! stopping.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 32],
            dropout: 0.3,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 32,
            validation_fraction: 0.15,
            patience: 20,
            max_epochs: 500,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(Error::InvalidConfig("dropout must lie in [0, 1)".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "validation_fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One dense layer: `weights[out][in]` and a bias per output unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn out_dim(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub n_features: usize,
    pub config: MlpConfig,
    /// Raised when a training feature mean falls outside [-3, 3]; the
    /// standardizer was probably skipped.
    pub non_standardized_warning: bool,
    pub epochs_trained: usize,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn he_init(rng: &mut ChaCha8Rng, dims: &[usize]) -> Vec<DenseLayer> {
    dims.windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (2.0 / fan_in as f64).sqrt();
            DenseLayer {
                weights: (0..fan_out)
                    .map(|_| (0..fan_in).map(|_| gaussian(rng) * scale).collect())
                    .collect(),
                bias: vec![0.0; fan_out],
            }
        })
        .collect()
}

fn softmax(logits: &[f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Forward/backward pass over a batch; returns mean cross-entropy and
/// parameter gradients. Public so gradient correctness can be verified
/// against finite differences from outside the crate. Dropout masks are
/// supplied per hidden layer (empty
/// slice = dropout off). Inverted dropout: kept units scale by 1/(1-rate),
/// so inference needs no rescale.
pub fn loss_and_gradients(
    layers: &[DenseLayer],
    rows: &[Vec<f64>],
    labels: &[usize],
    dropout_masks: Option<&[Vec<Vec<f64>>]>,
) -> (f64, Vec<DenseLayer>) {
    let n_layers = layers.len();
    let batch = rows.len();
    let mut grads: Vec<DenseLayer> = layers
        .iter()
        .map(|l| DenseLayer {
            weights: l.weights.iter().map(|r| vec![0.0; r.len()]).collect(),
            bias: vec![0.0; l.bias.len()],
        })
        .collect();
    let mut total_loss = 0.0;

    for (s, (row, &label)) in rows.iter().zip(labels).enumerate() {
        // Forward, keeping post-activation values per layer.
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        activations.push(row.clone());
        for (li, layer) in layers.iter().enumerate() {
            let input = &activations[li];
            let mut out: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(w, b)| w.iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
                .collect();
            let is_hidden = li + 1 < n_layers;
            if is_hidden {
                for v in &mut out {
                    *v = v.max(0.0);
                }
                if let Some(masks) = dropout_masks {
                    for (v, m) in out.iter_mut().zip(&masks[li][s]) {
                        *v *= m;
                    }
                }
            }
            activations.push(out);
        }
        let logits = &activations[n_layers];
        let probs = softmax(&[logits[0], logits[1]]);
        total_loss += -(probs[label].max(1e-300)).ln();

        // Backward: softmax + cross-entropy gives delta = p - y at the output.
        let mut delta: Vec<f64> = vec![probs[0], probs[1]];
        delta[label] -= 1.0;
        for li in (0..n_layers).rev() {
            let input = &activations[li];
            for (j, dj) in delta.iter().enumerate() {
                for (i, xi) in input.iter().enumerate() {
                    grads[li].weights[j][i] += dj * xi;
                }
                grads[li].bias[j] += dj;
            }
            if li == 0 {
                break;
            }
            let layer = &layers[li];
            let mut prev_delta = vec![0.0; input.len()];
            for (j, dj) in delta.iter().enumerate() {
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    *pd += dj * layer.weights[j][i];
                }
            }
            // ReLU (and dropout) gate: post-activation zero kills the path.
            for (i, pd) in prev_delta.iter_mut().enumerate() {
                if activations[li][i] <= 0.0 {
                    *pd = 0.0;
                } else if let Some(masks) = dropout_masks {
                    *pd *= masks[li - 1][s][i];
                }
            }
            delta = prev_delta;
        }
    }

    let scale = 1.0 / batch as f64;
    for g in &mut grads {
        for row in &mut g.weights {
            for v in row {
                *v *= scale;
            }
        }
        for v in &mut g.bias {
            *v *= scale;
        }
    }
    (total_loss * scale, grads)
}

fn forward(layers: &[DenseLayer], row: &[f64]) -> [f64; 2] {
    let n_layers = layers.len();
    let mut current = row.to_vec();
    for (li, layer) in layers.iter().enumerate() {
        let mut out: Vec<f64> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(w, b)| w.iter().zip(&current).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
            .collect();
        if li + 1 < n_layers {
            for v in &mut out {
                *v = v.max(0.0);
            }
        }
        current = out;
    }
    softmax(&[current[0], current[1]])
}

struct Adam {
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
    t: usize,
}

impl Adam {
    fn new(layers: &[DenseLayer]) -> Adam {
        let zeros: Vec<DenseLayer> = layers
            .iter()
            .map(|l| DenseLayer {
                weights: l.weights.iter().map(|r| vec![0.0; r.len()]).collect(),
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [DenseLayer], grads: &[DenseLayer], config: &MlpConfig) {
        self.t += 1;
        let b1 = config.beta1;
        let b2 = config.beta2;
        let bias1 = 1.0 - b1.powi(self.t as i32);
        let bias2 = 1.0 - b2.powi(self.t as i32);
        for (li, layer) in layers.iter_mut().enumerate() {
            for j in 0..layer.out_dim() {
                for i in 0..layer.weights[j].len() {
                    let g = grads[li].weights[j][i];
                    let m = &mut self.m[li].weights[j][i];
                    let v = &mut self.v[li].weights[j][i];
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    layer.weights[j][i] -= config.learning_rate * (*m / bias1)
                        / ((*v / bias2).sqrt() + config.adam_epsilon);
                }
                let g = grads[li].bias[j];
                let m = &mut self.m[li].bias[j];
                let v = &mut self.v[li].bias[j];
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                layer.bias[j] -= config.learning_rate * (*m / bias1)
                    / ((*v / bias2).sqrt() + config.adam_epsilon);
            }
        }
    }
}

fn validation_loss(layers: &[DenseLayer], rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &label) in rows.iter().zip(labels) {
        let p = forward(layers, row);
        total += -(p[label].max(1e-300)).ln();
    }
    total / rows.len() as f64
}

/// Mini-batch training with inverted dropout on the hidden layers and early
/// stopping that restores the best-validation-loss weights. Expects rows
/// already standardized.
pub fn train_mlp(rows: &[Vec<f64>], labels: &[usize], config: &MlpConfig) -> Result<MlpModel> {
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

    let non_standardized_warning = (0..d).any(|j| {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        !(-3.0..=3.0).contains(&mean)
    });

    // Validation split.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0xda7a]));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = ((config.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let val_rows: Vec<Vec<f64>> = val_idx.iter().map(|&i| rows[i].clone()).collect();
    let val_labels: Vec<usize> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut dims = vec![d];
    dims.extend_from_slice(&config.hidden);
    dims.push(2);
    let mut layers = he_init(&mut rng, &dims);
    let mut adam = Adam::new(&layers);

    let keep = 1.0 - config.dropout;
    let mut best_layers = layers.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0;
    let mut epochs_trained = 0;

    let mut index: Vec<usize> = (0..train_rows.len()).collect();
    for epoch in 0..config.max_epochs {
        index.shuffle(&mut rng);
        for chunk in index.chunks(config.batch_size) {
            let batch_rows: Vec<Vec<f64>> = chunk.iter().map(|&i| train_rows[i].clone()).collect();
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| train_labels[i]).collect();
            let masks: Option<Vec<Vec<Vec<f64>>>> = if config.dropout > 0.0 {
                Some(
                    config
                        .hidden
                        .iter()
                        .map(|&width| {
                            (0..batch_rows.len())
                                .map(|_| {
                                    (0..width)
                                        .map(|_| {
                                            if rng.gen::<f64>() < keep {
                                                1.0 / keep
                                            } else {
                                                0.0
                                            }
                                        })
                                        .collect()
                                })
                                .collect()
                        })
                        .collect(),
                )
            } else {
                None
            };
            let (_, grads) =
                loss_and_gradients(&layers, &batch_rows, &batch_labels, masks.as_deref());
            adam.step(&mut layers, &grads, config);
        }
        epochs_trained = epoch + 1;
        let val = validation_loss(&layers, &val_rows, &val_labels);
        if val < best_loss - 1e-12 {
            best_loss = val;
            best_layers = layers.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    Ok(MlpModel {
        layers: best_layers,
        n_features: d,
        config: config.clone(),
        non_standardized_warning,
        epochs_trained,
    })
}

impl MlpModel {
    /// Inference forward pass; dropout is inactive.
    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; 2]> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(forward(&self.layers, row))
    }
}

//! Leave-surface-out protocol, metric computation, the k-sweep, and
//! scatter-map construction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud_io::{Dataset, SurfaceClass};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::{
    apply_standardizer, derive_seed, fit_standardizer, train_gbdt, train_mlp,
    train_random_forest, BoostConfig, ForestConfig, MlpConfig, Model,
};
use crate::patching::PatchGrid;

/// The four unseen surfaces used by the fixed experiment.
pub const DEFAULT_TEST_SURFACES: [&str; 4] = ["metal_tin", "tv", "styrofoam", "fabric_pinboard"];

/// The ten named training surfaces of the fixed experiment.
pub const FIXED_TRAINING_SURFACES: [&str; 10] = [
    "smooth_wood",
    "concrete_wall",
    "rough_wood",
    "cardboard",
    "drywall",
    "corkboard",
    "projector_screen",
    "linoleum",
    "carpet",
    "metal_copper",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_surfaces: Vec<String>,
    /// Number of training surfaces sampled from the remainder.
    pub k: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn with_default_test(k: usize, seed: u64) -> SplitSpec {
        SplitSpec {
            test_surfaces: DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect(),
            k,
            seed,
        }
    }
}

/// A materialized split: disjoint surface sets and their patch indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Split {
    pub train_materials: Vec<String>,
    pub test_materials: Vec<String>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Distinct (material, class) pairs in first-appearance order.
pub fn material_classes(table: &FeatureMatrix) -> Vec<(String, SurfaceClass)> {
    let mut out: Vec<(String, SurfaceClass)> = Vec::new();
    for (id, &label) in table.provenance.iter().zip(&table.labels) {
        if !out.iter().any(|(name, _)| name == &id.material) {
            out.push((id.material.clone(), label));
        }
    }
    out
}

/// Sample k training surfaces uniformly without replacement from the
/// materials not in the fixed test set.
pub fn sample_split_materials(
    materials: &[(String, SurfaceClass)],
    spec: &SplitSpec,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut semi = 0;
    let mut low = 0;
    for name in &spec.test_surfaces {
        let class = materials
            .iter()
            .find(|(m, _)| m == name)
            .map(|(_, c)| *c)
            .ok_or_else(|| Error::UnknownTestSurface { name: name.clone() })?;
        match class {
            SurfaceClass::SemiSpecular => semi += 1,
            SurfaceClass::LowSpecular => low += 1,
        }
    }
    if semi != 2 || low != 2 {
        return Err(Error::InvalidConfig(format!(
            "test set must contain two surfaces of each class (got {semi} semi, {low} low)"
        )));
    }
    let mut pool: Vec<String> = materials
        .iter()
        .map(|(name, _)| name.clone())
        .filter(|name| !spec.test_surfaces.contains(name))
        .collect();
    if spec.k > pool.len() {
        return Err(Error::KTooLarge {
            k: spec.k,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    pool.shuffle(&mut rng);
    let mut train: Vec<String> = pool[..spec.k].to_vec();
    train.sort();
    Ok((train, spec.test_surfaces.clone()))
}

fn indices_for(table: &FeatureMatrix, materials: &[String]) -> Vec<usize> {
    table
        .provenance
        .iter()
        .enumerate()
        .filter(|(_, id)| materials.contains(&id.material))
        .map(|(i, _)| i)
        .collect()
}

/// Build a split from explicit train/test material lists.
pub fn split_from_materials(
    table: &FeatureMatrix,
    train_materials: &[String],
    test_materials: &[String],
) -> Result<Split> {
    for name in train_materials.iter().chain(test_materials) {
        if !table.provenance.iter().any(|id| &id.material == name) {
            return Err(Error::UnknownTestSurface { name: name.clone() });
        }
    }
    if train_materials.iter().any(|m| test_materials.contains(m)) {
        return Err(Error::InvalidConfig(
            "train and test surfaces overlap".into(),
        ));
    }
    Ok(Split {
        train_materials: train_materials.to_vec(),
        test_materials: test_materials.to_vec(),
        train_indices: indices_for(table, train_materials),
        test_indices: indices_for(table, test_materials),
    })
}

pub fn leave_surface_out_split(table: &FeatureMatrix, spec: &SplitSpec) -> Result<Split> {
    let materials = material_classes(table);
    let (train, test) = sample_split_materials(&materials, spec)?;
    split_from_materials(table, &train, &test)
}

/// Per-class precision/recall/F1 with explicit zero-division flags.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced a metric to 0.
    pub zero_division: bool,
}

/// Confusion-matrix orientation: rows = true class, columns = predicted,
/// classes ordered (low-specular, semi-specular).
pub fn precision_recall_f1(confusion: &[[usize; 2]; 2]) -> (f64, [ClassMetrics; 2]) {
    let total: usize = confusion.iter().flatten().sum();
    let accuracy = if total > 0 {
        (confusion[0][0] + confusion[1][1]) as f64 / total as f64
    } else {
        0.0
    };
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        zero_division: false,
    }; 2];
    for c in 0..2 {
        let tp = confusion[c][c] as f64;
        let fp = confusion[1 - c][c] as f64;
        let fn_ = confusion[c][1 - c] as f64;
        let mut flag = false;
        let precision = if tp + fp > 0.0 {
            tp / (tp + fp)
        } else {
            flag = true;
            0.0
        };
        let recall = if tp + fn_ > 0.0 {
            tp / (tp + fn_)
        } else {
            flag = true;
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            flag = true;
            0.0
        };
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1,
            zero_division: flag,
        };
    }
    (accuracy, per_class)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub model_id: String,
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 2],
    pub confusion: [[usize; 2]; 2],
    pub n_test: usize,
    pub split: Split,
}

/// Model configurations trained side by side on each split.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelSuite {
    pub forest: Option<ForestConfig>,
    pub boosted: Option<BoostConfig>,
    pub mlp: Option<MlpConfig>,
}

impl ModelSuite {
    pub fn all_defaults() -> ModelSuite {
        ModelSuite {
            forest: Some(ForestConfig::default()),
            boosted: Some(BoostConfig::default()),
            mlp: Some(MlpConfig::default()),
        }
    }

    fn reseeded(&self, seed: u64) -> ModelSuite {
        let mut suite = self.clone();
        if let Some(f) = &mut suite.forest {
            f.seed = derive_seed(seed, &[1]);
        }
        if let Some(b) = &mut suite.boosted {
            b.seed = derive_seed(seed, &[2]);
        }
        if let Some(m) = &mut suite.mlp {
            m.seed = derive_seed(seed, &[3]);
        }
        suite
    }
}

fn gather(table: &FeatureMatrix, indices: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let rows = indices.iter().map(|&i| table.rows[i].to_vec()).collect();
    let labels = indices.iter().map(|&i| table.labels[i].index()).collect();
    (rows, labels)
}

fn confusion_from_predictions(
    true_labels: &[usize],
    predicted: &[SurfaceClass],
) -> [[usize; 2]; 2] {
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        confusion[t][p.index()] += 1;
    }
    confusion
}

fn train_suite(
    train_rows: &[Vec<f64>],
    train_labels: &[usize],
    suite: &ModelSuite,
) -> Result<Vec<Model>> {
    let mut models: Vec<Model> = Vec::new();
    if let Some(config) = &suite.forest {
        models.push(Model::Forest(train_random_forest(
            train_rows,
            train_labels,
            config,
        )?));
    }
    if let Some(config) = &suite.boosted {
        models.push(Model::Boosted(train_gbdt(train_rows, train_labels, config)?));
    }
    if let Some(config) = &suite.mlp {
        let standardizer = fit_standardizer(train_rows)?;
        let standardized = apply_standardizer(&standardizer, train_rows)?;
        let net = train_mlp(&standardized, train_labels, config)?;
        models.push(Model::Mlp {
            standardizer: Some(standardizer),
            net,
        });
    }
    Ok(models)
}

/// Train every configured model on the split's training patches
/// (standardizing only the network's inputs), score the test patches, and
/// hand back the fitted models alongside the metric reports.
pub fn evaluate_once_with_models(
    table: &FeatureMatrix,
    split: &Split,
    suite: &ModelSuite,
) -> Result<(Vec<RunResult>, Vec<Model>)> {
    let (train_rows, train_labels) = gather(table, &split.train_indices);
    let (test_rows, test_labels) = gather(table, &split.test_indices);
    let models = train_suite(&train_rows, &train_labels, suite)?;

    let results = models
        .iter()
        .map(|model| {
            let predictions = model.predict_batch(&test_rows)?;
            let predicted: Vec<SurfaceClass> = predictions.iter().map(|p| p.label).collect();
            let confusion = confusion_from_predictions(&test_labels, &predicted);
            let (accuracy, per_class) = precision_recall_f1(&confusion);
            Ok(RunResult {
                model_id: model.id().to_string(),
                accuracy,
                per_class,
                confusion,
                n_test: test_rows.len(),
                split: split.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((results, models))
}

/// `evaluate_once_with_models` when only the metrics are needed.
pub fn evaluate_once(
    table: &FeatureMatrix,
    split: &Split,
    suite: &ModelSuite,
) -> Result<Vec<RunResult>> {
    Ok(evaluate_once_with_models(table, split, suite)?.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub model: String,
    pub max_accuracy: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Successful repetitions aggregated.
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRun {
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub model: String,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
    pub train_materials: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub master_seed: u64,
    pub repeats: usize,
    pub entries: Vec<SweepEntry>,
    pub runs: Vec<SweepRun>,
}

/// The Table-III-style sweep: for each (k, repetition) a fresh seeded split
/// shared by all models, re-seeding models per repetition. Repetitions run
/// in parallel; aggregation order is (k, repetition), so the report does not
/// depend on scheduling. Repetitions whose training set degenerates (e.g. a
/// single class at small k) are recorded with their error and excluded from
/// the aggregates.
pub fn sweep(
    table: &FeatureMatrix,
    k_values: &[usize],
    repeats: usize,
    test_surfaces: &[String],
    suite: &ModelSuite,
    master_seed: u64,
) -> Result<SweepReport> {
    let jobs: Vec<(usize, usize)> = k_values
        .iter()
        .flat_map(|&k| (0..repeats).map(move |rep| (k, rep)))
        .collect();

    let per_job: Vec<Vec<SweepRun>> = jobs
        .par_iter()
        .map(|&(k, rep)| {
            let seed = derive_seed(master_seed, &[k as u64, rep as u64]);
            let spec = SplitSpec {
                test_surfaces: test_surfaces.to_vec(),
                k,
                seed,
            };
            let reseeded = suite.reseeded(derive_seed(master_seed, &[k as u64, rep as u64, 0x5eed]));
            let split = match leave_surface_out_split(table, &spec) {
                Ok(split) => split,
                Err(e) => {
                    return vec![SweepRun {
                        k,
                        repetition: rep,
                        seed,
                        model: "all".into(),
                        accuracy: None,
                        error: Some(e.to_string()),
                        train_materials: Vec::new(),
                    }]
                }
            };
            match evaluate_once(table, &split, &reseeded) {
                Ok(results) => results
                    .into_iter()
                    .map(|r| SweepRun {
                        k,
                        repetition: rep,
                        seed,
                        model: r.model_id,
                        accuracy: Some(r.accuracy),
                        error: None,
                        train_materials: split.train_materials.clone(),
                    })
                    .collect(),
                Err(e) => vec![SweepRun {
                    k,
                    repetition: rep,
                    seed,
                    model: "all".into(),
                    accuracy: None,
                    error: Some(e.to_string()),
                    train_materials: split.train_materials.clone(),
                }],
            }
        })
        .collect();

    let runs: Vec<SweepRun> = per_job.into_iter().flatten().collect();

    let mut entries = Vec::new();
    let model_ids = ["forest", "boosted", "mlp"];
    for &k in k_values {
        for model in model_ids {
            let accs: Vec<f64> = runs
                .iter()
                .filter(|r| r.k == k && r.model == model)
                .filter_map(|r| r.accuracy)
                .collect();
            if accs.is_empty() {
                continue;
            }
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            entries.push(SweepEntry {
                k,
                model: model.to_string(),
                max_accuracy: accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
                repetitions: accs.len(),
            });
        }
    }
    Ok(SweepReport {
        master_seed,
        repeats,
        entries,
        runs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// Precision-recall curve for the semi-specular class: one point per
/// distinct probability threshold (predict semi when p >= threshold),
/// sorted by increasing threshold.
pub fn pr_curve(labels: &[SurfaceClass], semi_probabilities: &[f64]) -> Result<PrCurve> {
    if labels.len() != semi_probabilities.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: semi_probabilities.len(),
        });
    }
    if semi_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidConfig("probabilities must lie in [0, 1]".into()));
    }
    let positives = labels
        .iter()
        .filter(|&&l| l == SurfaceClass::SemiSpecular)
        .count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClassLabels);
    }
    let mut thresholds: Vec<f64> = semi_probabilities.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let points = thresholds
        .into_iter()
        .map(|threshold| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            for (&label, &p) in labels.iter().zip(semi_probabilities) {
                if p >= threshold {
                    if label == SurfaceClass::SemiSpecular {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let precision = if tp + fp > 0 {
                tp as f64 / (tp + fp) as f64
            } else {
                0.0
            };
            PrPoint {
                threshold,
                precision,
                recall: tp as f64 / positives as f64,
            }
        })
        .collect();
    Ok(PrCurve { points })
}

/// Step-wise average precision over the curve.
pub fn average_precision(curve: &PrCurve) -> f64 {
    let mut ap = 0.0;
    let mut prev_recall = 1.0;
    for point in &curve.points {
        ap += (prev_recall - point.recall) * point.precision;
        prev_recall = point.recall;
    }
    ap
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub material: String,
    pub grid_u: i64,
    pub grid_v: i64,
    pub center: [f64; 3],
    pub predicted: SurfaceClass,
    pub p_semi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterMap {
    pub records: Vec<ScatterRecord>,
}

/// Predict every retained patch of the given grids and attach 3-D centers.
pub fn build_scatter_map(
    dataset: &Dataset,
    grids: &[PatchGrid],
    model: &Model,
    epsilon: f64,
) -> Result<ScatterMap> {
    use crate::features::patch_features;
    let mut records = Vec::new();
    for grid in grids {
        let scan = dataset
            .scan(&grid.material_name)
            .ok_or_else(|| Error::UnknownTestSurface {
                name: grid.material_name.clone(),
            })?;
        for patch in &grid.patches {
            let feats = patch_features(patch, scan, epsilon)?;
            let prediction = model.predict(&feats.model_row())?;
            records.push(ScatterRecord {
                material: grid.material_name.clone(),
                grid_u: patch.grid_u,
                grid_v: patch.grid_v,
                center: patch.center,
                predicted: prediction.label,
                p_semi: prediction.probabilities[1],
            });
        }
    }
    Ok(ScatterMap { records })
}

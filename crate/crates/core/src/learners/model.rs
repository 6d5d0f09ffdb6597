//! Unified trained-model wrapper with versioned JSON serialization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::forest::ForestModel;
use super::gbdt::GbdtModel;
use super::mlp::MlpModel;
use super::standardizer::Standardizer;
use crate::cloud_io::SurfaceClass;
use crate::error::{Error, Result};

const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained classifier. The network carries the standardizer fitted on its
/// training rows; the tree models operate on raw features.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Forest(ForestModel),
    Boosted(GbdtModel),
    Mlp {
        standardizer: Option<Standardizer>,
        net: MlpModel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: [f64; 2],
    pub label: SurfaceClass,
}

impl Model {
    pub fn id(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Boosted(_) => "boosted",
            Model::Mlp { .. } => "mlp",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_features,
            Model::Boosted(m) => m.n_features,
            Model::Mlp { net, .. } => net.n_features,
        }
    }

    /// Class probabilities and argmax label; ties go to class index 0.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        let probabilities = match self {
            Model::Forest(m) => m.predict_proba(row)?,
            Model::Boosted(m) => m.predict_proba(row)?,
            Model::Mlp { standardizer, net } => match standardizer {
                Some(s) => net.predict_proba(&s.apply_row(row)?)?,
                None => net.predict_proba(row)?,
            },
        };
        let label = if probabilities[1] > probabilities[0] {
            SurfaceClass::SemiSpecular
        } else {
            SurfaceClass::LowSpecular
        };
        Ok(Prediction {
            probabilities,
            label,
        })
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct VersionedModel {
    format_version: u32,
    model: Model,
}

pub fn save_model<W: Write>(model: &Model, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(
        writer,
        &VersionedModel {
            format_version: MODEL_FORMAT_VERSION,
            model: model.clone(),
        },
    )?;
    Ok(())
}

pub fn load_model<R: Read>(reader: R) -> Result<Model> {
    let versioned: VersionedModel = serde_json::from_reader(reader)?;
    if versioned.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedModelVersion(versioned.format_version));
    }
    Ok(versioned.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train_gbdt, train_random_forest, BoostConfig, ForestConfig};

    fn toy() -> (Vec<Vec<f64>>, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, (i * 7 % 13) as f64])
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| (i >= 20) as usize).collect();
        (rows, labels)
    }

    #[test]
    fn tie_breaks_to_low_specular() {
        // A boosted model with only zero-valued leaves stays at the prior;
        // on balanced data that is (0.5, 0.5), which must resolve to class 0.
        let (rows, labels) = toy();
        let model = Model::Boosted(
            train_gbdt(
                &rows,
                &labels,
                &BoostConfig {
                    gamma: 1e9,
                    subsample: 1.0,
                    colsample_bytree: 1.0,
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        let p = model.predict(&[3.0, 4.0]).unwrap();
        assert!((p.probabilities[0] - 0.5).abs() < 1e-9);
        assert_eq!(p.label, SurfaceClass::LowSpecular);
    }

    #[test]
    fn json_round_trip() {
        let (rows, labels) = toy();
        let model = Model::Forest(
            train_random_forest(
                &rows,
                &labels,
                &ForestConfig {
                    n_estimators: 10,
                    seed: 1,
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        let mut buf = Vec::new();
        save_model(&model, &mut buf).unwrap();
        let loaded = load_model(buf.as_slice()).unwrap();
        for row in &rows {
            assert_eq!(
                model.predict(row).unwrap().probabilities,
                loaded.predict(row).unwrap().probabilities
            );
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (rows, labels) = toy();
        let model = Model::Forest(
            train_random_forest(
                &rows,
                &labels,
                &ForestConfig {
                    n_estimators: 15,
                    seed: 2,
                    ..Default::default()
                },
            )
            .unwrap(),
        );
        for row in &rows {
            let p = model.predict(row).unwrap().probabilities;
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
        }
    }
}

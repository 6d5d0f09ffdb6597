//! Per-feature standardization, applied only to the network's inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Learn per-feature mean and (population) standard deviation.
pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    if rows.len() < 2 {
        return Err(Error::EmptyTrainingSet);
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in rows {
        for j in 0..d {
            let delta = row[j] - mean[j];
            var[j] += delta * delta;
        }
    }
    let mut std = vec![0.0; d];
    for j in 0..d {
        let s = (var[j] / n).sqrt();
        if s <= 0.0 {
            return Err(Error::DegenerateFeature { index: j });
        }
        std[j] = s;
    }
    Ok(Standardizer { mean, std })
}

pub fn apply_standardizer(s: &Standardizer, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|row| {
            if row.len() != s.mean.len() {
                return Err(Error::DimensionMismatch {
                    expected: s.mean.len(),
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .zip(s.mean.iter().zip(&s.std))
                .map(|(v, (m, sd))| (v - m) / sd)
                .collect())
        })
        .collect()
}

impl Standardizer {
    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, sd))| (v - m) / sd)
            .collect())
    }
}

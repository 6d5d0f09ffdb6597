//! Per-patch feature vectors and the specularity labeling metric.

use serde::{Deserialize, Serialize};

use crate::cloud_io::{Dataset, LidarPoint, SurfaceClass, SurfaceScan};
use crate::error::{Error, Result};
use crate::patching::{Patch, PatchGrid};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_SPECULARITY_THRESHOLD_DB: f64 = 10.0;

/// Feature names of the three model inputs, in column order.
pub const MODEL_FEATURE_NAMES: [&str; 3] =
    ["mean_elevation_angle", "log_linear_max", "max_to_mean_ratio"];

/// All per-patch statistics. The model consumes only the first three.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PatchFeatures {
    pub mean_elevation_angle: f64,
    pub log_linear_max: f64,
    pub log_linear_mean: f64,
    pub max_to_mean_ratio: f64,
    pub mean_linear: f64,
    pub specularity_db: f64,
}

impl PatchFeatures {
    /// The three model inputs in [`MODEL_FEATURE_NAMES`] order.
    pub fn model_row(&self) -> [f64; 3] {
        [
            self.mean_elevation_angle,
            self.log_linear_max,
            self.max_to_mean_ratio,
        ]
    }
}

/// Angle above the sensor's horizontal plane, in degrees.
pub fn elevation_angle(point: &LidarPoint) -> Result<f64> {
    let horiz = point.x.hypot(point.y);
    if horiz == 0.0 {
        return Err(Error::ZeroHorizontalRange);
    }
    Ok((point.z / horiz).atan().to_degrees())
}

/// ln(1 + linear), evaluated stably for small arguments.
pub fn log_scale(linear: f64) -> Result<f64> {
    if !linear.is_finite() || linear < 0.0 {
        return Err(Error::NegativeIntensity { value: linear });
    }
    Ok(linear.ln_1p())
}

/// 10 log10(max / mean) over a nonempty set of linear intensities.
pub fn specularity_db(linear_intensities: &[f64]) -> Result<f64> {
    if linear_intensities.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in linear_intensities {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NegativeIntensity { value: v });
        }
        max = max.max(v);
        sum += v;
    }
    let mean = sum / linear_intensities.len() as f64;
    if mean <= 0.0 {
        return Err(Error::AllZeroIntensities);
    }
    Ok(10.0 * (max / mean).log10())
}

/// Whole-surface specularity over all linearized intensities of the scan.
pub fn surface_specularity(scan: &SurfaceScan) -> Result<f64> {
    let intensities: Vec<f64> = scan.points.iter().map(|p| p.intensity_linear).collect();
    specularity_db(&intensities)
}

/// Threshold labeling: strictly above `threshold` dB is semi-specular.
pub fn assign_class(surface_specularity_db: f64, threshold_db: f64) -> SurfaceClass {
    if surface_specularity_db > threshold_db {
        SurfaceClass::SemiSpecular
    } else {
        SurfaceClass::LowSpecular
    }
}

/// Compute all six statistics over a patch's member points.
pub fn patch_features(patch: &Patch, scan: &SurfaceScan, epsilon: f64) -> Result<PatchFeatures> {
    if patch.point_indices.is_empty() {
        return Err(Error::EmptyPatch);
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let n = patch.point_indices.len() as f64;
    let mut elev_sum = 0.0;
    let mut log_max = f64::NEG_INFINITY;
    let mut log_sum = 0.0;
    let mut linear_sum = 0.0;
    let mut linears = Vec::with_capacity(patch.point_indices.len());
    for &i in &patch.point_indices {
        let point = &scan.points[i];
        elev_sum += elevation_angle(point)?;
        let log_linear = log_scale(point.intensity_linear)?;
        log_max = log_max.max(log_linear);
        log_sum += log_linear;
        linear_sum += point.intensity_linear;
        linears.push(point.intensity_linear);
    }
    let log_mean = log_sum / n;
    Ok(PatchFeatures {
        mean_elevation_angle: elev_sum / n,
        log_linear_max: log_max,
        log_linear_mean: log_mean,
        max_to_mean_ratio: log_max / (log_mean + epsilon),
        mean_linear: linear_sum / n,
        specularity_db: specularity_db(&linears)?,
    })
}

/// Model-ready rows with labels and (material, grid_u, grid_v) provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<[f64; 3]>,
    pub labels: Vec<SurfaceClass>,
    pub provenance: Vec<PatchId>,
    /// Auxiliary per-patch statistics, same order as `rows`.
    pub full: Vec<PatchFeatures>,
    /// Patch centers in 3-D, same order as `rows`.
    pub centers: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatchId {
    pub material: String,
    pub grid_u: i64,
    pub grid_v: i64,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn materials(&self) -> Vec<String> {
        let mut names = Vec::new();
        for id in &self.provenance {
            if !names.contains(&id.material) {
                names.push(id.material.clone());
            }
        }
        names
    }
}

/// Build the labeled feature matrix for a set of patch grids. Unlabeled
/// scans are rejected; use [`patch_features`] directly for inference-only
/// inputs.
pub fn feature_matrix(dataset: &Dataset, grids: &[PatchGrid], epsilon: f64) -> Result<FeatureMatrix> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    let mut full = Vec::new();
    let mut centers = Vec::new();
    for grid in grids {
        let scan = dataset
            .scan(&grid.material_name)
            .ok_or_else(|| Error::UnknownTestSurface {
                name: grid.material_name.clone(),
            })?;
        let label = scan
            .canonical_class
            .ok_or_else(|| Error::InvalidConfig(format!(
                "scan '{}' is unlabeled",
                scan.material_name
            )))?;
        for patch in &grid.patches {
            let feats = patch_features(patch, scan, epsilon)?;
            rows.push(feats.model_row());
            labels.push(label);
            provenance.push(PatchId {
                material: grid.material_name.clone(),
                grid_u: patch.grid_u,
                grid_v: patch.grid_v,
            });
            full.push(feats);
            centers.push(patch.center);
        }
    }
    Ok(FeatureMatrix {
        rows,
        labels,
        provenance,
        full,
        centers,
    })
}

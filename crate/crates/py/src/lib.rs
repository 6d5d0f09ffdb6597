//! Python bindings for the surface-classification pipeline.
//!
//! Build with `--features extension-module` to produce the `specmap`
//! extension; see `python/smoke_test.py` for usage.

use std::fs::File;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use specmap_core::cloud_io::{load_dataset, CsvSchema, DatasetManifest, SurfaceClass};
use specmap_core::evaluation::{
    evaluate_once, split_from_materials, sweep as core_sweep, ModelSuite,
    DEFAULT_TEST_SURFACES, FIXED_TRAINING_SURFACES,
};
use specmap_core::features::{feature_matrix, FeatureMatrix};
use specmap_core::learners::{
    derive_seed, load_model as core_load_model, save_model, train_gbdt, train_mlp,
    train_random_forest, apply_standardizer, fit_standardizer, BoostConfig, ForestConfig,
    MlpConfig, Model,
};
use specmap_core::patching::partition_into_patches;
use specmap_core::refdata::write_reference_dataset;
use specmap_core::synth::{
    generate_scan, rayleigh_threshold as core_hc, scattering_factor as core_rho, RoughnessSpec,
    SyntheticSurfaceSpec, WaveSpec,
};
use specmap_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::FileLoad { .. } => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// A labeled per-patch feature table built from a dataset manifest.
#[pyclass]
struct FeatureTable {
    inner: FeatureMatrix,
}

#[pymethods]
impl FeatureTable {
    /// Load every scan in the manifest, bin it into patches, and compute
    /// the three model features per patch.
    #[new]
    #[pyo3(signature = (manifest_path, bin_size=0.03, min_points=5, epsilon=1e-9))]
    fn new(manifest_path: PathBuf, bin_size: f64, min_points: usize, epsilon: f64) -> PyResult<Self> {
        let manifest = DatasetManifest::from_path(&manifest_path).map_err(py_err)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let dataset = load_dataset(&manifest, base, &CsvSchema::default()).map_err(py_err)?;
        let grids = dataset
            .scans
            .iter()
            .map(|s| partition_into_patches(s, bin_size, min_points))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        let inner = feature_matrix(&dataset, &grids, epsilon).map_err(py_err)?;
        Ok(FeatureTable { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Distinct material names in first-appearance order.
    fn materials(&self) -> Vec<String> {
        self.inner.materials()
    }

    /// The model input rows: [mean elevation deg, log-linear max, MMR].
    fn rows(&self) -> Vec<[f64; 3]> {
        self.inner.rows.clone()
    }

    /// Class label per row, "semi" or "low".
    fn labels(&self) -> Vec<&'static str> {
        self.inner.labels.iter().map(|c| c.as_str()).collect()
    }

    /// (material, grid_u, grid_v) per row.
    fn provenance(&self) -> Vec<(String, i64, i64)> {
        self.inner
            .provenance
            .iter()
            .map(|p| (p.material.clone(), p.grid_u, p.grid_v))
            .collect()
    }
}

/// A trained classifier; predicts (label, p_semi) per feature row.
#[pyclass]
struct Classifier {
    inner: Model,
}

#[pymethods]
impl Classifier {
    /// "forest", "boosted", or "mlp".
    fn model_id(&self) -> &'static str {
        self.inner.id()
    }

    /// Predict a batch of feature rows.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<(&'static str, f64)>> {
        let predictions = self.inner.predict_batch(&rows).map_err(py_err)?;
        Ok(predictions
            .iter()
            .map(|p| (p.label.as_str(), p.probabilities[1]))
            .collect())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let file = File::create(path).map_err(|e| py_err(e.into()))?;
        save_model(&self.inner, file).map_err(py_err)
    }
}

/// Train one model on the patches of the given materials.
#[pyfunction]
#[pyo3(signature = (table, train_materials, model="forest", seed=0))]
fn train(
    table: &FeatureTable,
    train_materials: Vec<String>,
    model: &str,
    seed: u64,
) -> PyResult<Classifier> {
    let inner = &table.inner;
    let indices: Vec<usize> = (0..inner.len())
        .filter(|&i| train_materials.contains(&inner.provenance[i].material))
        .collect();
    if indices.is_empty() {
        return Err(PyValueError::new_err("no patches match train_materials"));
    }
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| inner.rows[i].to_vec()).collect();
    let labels: Vec<usize> = indices.iter().map(|&i| inner.labels[i].index()).collect();
    let trained = match model {
        "forest" => Model::Forest(
            train_random_forest(&rows, &labels, &ForestConfig { seed, ..ForestConfig::default() })
                .map_err(py_err)?,
        ),
        "boosted" => Model::Boosted(
            train_gbdt(&rows, &labels, &BoostConfig { seed, ..BoostConfig::default() })
                .map_err(py_err)?,
        ),
        "mlp" => {
            let standardizer = fit_standardizer(&rows).map_err(py_err)?;
            let standardized = apply_standardizer(&standardizer, &rows).map_err(py_err)?;
            let net = train_mlp(&standardized, &labels, &MlpConfig { seed, ..MlpConfig::default() })
                .map_err(py_err)?;
            Model::Mlp {
                standardizer: Some(standardizer),
                net,
            }
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown model '{other}'; use forest, boosted, or mlp"
            )))
        }
    };
    Ok(Classifier { inner: trained })
}

#[pyfunction]
fn load_model(path: PathBuf) -> PyResult<Classifier> {
    let file = File::open(path).map_err(|e| py_err(e.into()))?;
    Ok(Classifier {
        inner: core_load_model(file).map_err(py_err)?,
    })
}

/// The canonical 10-train/4-test experiment averaged over seeds; returns
/// {model: {"accuracy", "low_recall", "semi_recall"}}.
#[pyfunction]
#[pyo3(signature = (table, seeds=20, master_seed=99))]
fn evaluate_fixed<'py>(
    py: Python<'py>,
    table: &FeatureTable,
    seeds: u64,
    master_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let inner = &table.inner;
    let train: Vec<String> = FIXED_TRAINING_SURFACES.iter().map(|s| s.to_string()).collect();
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    let split = split_from_materials(inner, &train, &test).map_err(py_err)?;
    let mut sums: std::collections::BTreeMap<String, (f64, f64, f64)> = Default::default();
    for rep in 0..seeds {
        let base = derive_seed(master_seed, &[rep]);
        let mut suite = ModelSuite::all_defaults();
        if let Some(f) = &mut suite.forest {
            f.seed = derive_seed(base, &[1]);
        }
        if let Some(b) = &mut suite.boosted {
            b.seed = derive_seed(base, &[2]);
        }
        if let Some(m) = &mut suite.mlp {
            m.seed = derive_seed(base, &[3]);
        }
        for r in evaluate_once(inner, &split, &suite).map_err(py_err)? {
            let e = sums.entry(r.model_id.clone()).or_default();
            e.0 += r.accuracy;
            e.1 += r.per_class[SurfaceClass::LowSpecular.index()].recall;
            e.2 += r.per_class[SurfaceClass::SemiSpecular.index()].recall;
        }
    }
    let out = PyDict::new_bound(py);
    let n = seeds as f64;
    for (model, (acc, low, semi)) in sums {
        let entry = PyDict::new_bound(py);
        entry.set_item("accuracy", acc / n)?;
        entry.set_item("low_recall", low / n)?;
        entry.set_item("semi_recall", semi / n)?;
        out.set_item(model, entry)?;
    }
    Ok(out)
}

/// The k-sweep; returns one dict per (k, model) aggregate.
#[pyfunction]
#[pyo3(signature = (table, k_values, repeats=50, master_seed=1234))]
fn sweep<'py>(
    py: Python<'py>,
    table: &FeatureTable,
    k_values: Vec<usize>,
    repeats: usize,
    master_seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    let report = core_sweep(
        &table.inner,
        &k_values,
        repeats,
        &test,
        &ModelSuite::all_defaults(),
        master_seed,
    )
    .map_err(py_err)?;
    report
        .entries
        .iter()
        .map(|e| {
            let d = PyDict::new_bound(py);
            d.set_item("k", e.k)?;
            d.set_item("model", &e.model)?;
            d.set_item("mean_accuracy", e.mean_accuracy)?;
            d.set_item("std_accuracy", e.std_accuracy)?;
            d.set_item("repetitions", e.repetitions)?;
            Ok(d)
        })
        .collect()
}

/// Peak-to-average reflection sharpness, 10*log10(max/mean), in dB.
#[pyfunction]
fn specularity_db(linear_intensities: Vec<f64>) -> PyResult<f64> {
    specmap_core::features::specularity_db(&linear_intensities).map_err(py_err)
}

/// Rayleigh roughness threshold h_c = wavelength / (8 cos incidence).
#[pyfunction]
fn rayleigh_threshold(wavelength: f64, incidence_angle: f64) -> PyResult<f64> {
    core_hc(WaveSpec {
        wavelength,
        incidence_angle,
    })
    .map_err(py_err)
}

/// Coherent scattering factor exp[-8 (pi h_rms cos theta / wavelength)^2].
#[pyfunction]
fn scattering_factor(h_rms: f64, wavelength: f64, incidence_angle: f64) -> PyResult<f64> {
    core_rho(
        RoughnessSpec { h_rms },
        WaveSpec {
            wavelength,
            incidence_angle,
        },
    )
    .map_err(py_err)
}

/// Generate a synthetic scan from a JSON spec and write it as CSV.
#[pyfunction]
fn generate_synthetic_scan(spec_json: &str, csv_path: PathBuf) -> PyResult<usize> {
    let spec: SyntheticSurfaceSpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let scan = generate_scan(&spec).map_err(py_err)?;
    let file = File::create(csv_path).map_err(|e| py_err(e.into()))?;
    specmap_core::cloud_io::write_scan_csv(&scan, std::io::BufWriter::new(file)).map_err(py_err)?;
    Ok(scan.points.len())
}

/// Write the bundled reference dataset (per-material CSVs + manifest.json).
#[pyfunction]
#[pyo3(signature = (dir, seed=specmap_core::refdata::DEFAULT_REFDATA_SEED))]
fn write_reference_data(dir: PathBuf, seed: u64) -> PyResult<usize> {
    let manifest = write_reference_dataset(&dir, seed).map_err(py_err)?;
    Ok(manifest.entries.len())
}

#[pymodule]
fn specmap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FeatureTable>()?;
    m.add_class::<Classifier>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(load_model, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(specularity_db, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_factor, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_scan, m)?)?;
    m.add_function(wrap_pyfunction!(write_reference_data, m)?)?;
    Ok(())
}

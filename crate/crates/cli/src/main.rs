//! `specmap`: command-line front end for the surface-reflectivity pipeline.
//!
//! Subcommands: `ingest`, `featurize`, `evaluate`, `scatter-map`, `synth`,
//! plus `dataset` to materialize the bundled reference capture. Every
//! randomized command is driven by an explicit master seed and every output
//! embeds the effective configuration, so reruns reproduce outputs
//! bit-identically.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use specmap_core::cloud_io::{
    load_dataset, write_scan_csv, CsvSchema, Dataset, DatasetManifest,
};
use specmap_core::evaluation::{
    build_scatter_map, evaluate_once_with_models, pr_curve, split_from_materials, sweep,
    ModelSuite, RunResult, DEFAULT_TEST_SURFACES, FIXED_TRAINING_SURFACES,
};
use specmap_core::features::{
    assign_class, feature_matrix, surface_specularity, DEFAULT_EPSILON,
    DEFAULT_SPECULARITY_THRESHOLD_DB,
};
use specmap_core::learners::{derive_seed, load_model, save_model};
use specmap_core::patching::{
    partition_into_patches, patch_count_report, PatchGrid, DEFAULT_BIN_SIZE, DEFAULT_MIN_POINTS,
};
use specmap_core::refdata::{write_reference_dataset, DEFAULT_REFDATA_SEED};
use specmap_core::synth::{generate_scan, SyntheticSurfaceSpec};
use specmap_core::{Error, Result};

const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 1;

/// Effective run configuration. Resolution order: built-in defaults, then
/// the `--config` JSON file, then individual flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    manifest: Option<PathBuf>,
    bin_size: f64,
    min_points: usize,
    epsilon: f64,
    threshold_db: f64,
    models: ModelSuite,
    k_min: usize,
    k_max: usize,
    repeats: usize,
    /// Seed count for fixed-split averaging.
    seeds: usize,
    master_seed: u64,
    output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            bin_size: DEFAULT_BIN_SIZE,
            min_points: DEFAULT_MIN_POINTS,
            epsilon: DEFAULT_EPSILON,
            threshold_db: DEFAULT_SPECULARITY_THRESHOLD_DB,
            models: ModelSuite::all_defaults(),
            k_min: 2,
            k_max: 11,
            repeats: 50,
            seeds: 20,
            master_seed: 1234,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.bin_size > 0.0) {
            return Err(Error::InvalidConfig("bin_size must be positive".into()));
        }
        if self.min_points == 0 {
            return Err(Error::InvalidConfig("min_points must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(Error::InvalidConfig("need 1 <= k_min <= k_max".into()));
        }
        if self.repeats == 0 || self.seeds == 0 {
            return Err(Error::InvalidConfig("repeats and seeds must be positive".into()));
        }
        Ok(())
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON config file with RunConfig fields (all optional).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset manifest (JSON list of material/path/class entries).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Patch bin size in meters.
    #[arg(long, global = true)]
    bin_size: Option<f64>,
    /// Minimum points for a patch to be retained.
    #[arg(long, global = true)]
    min_points: Option<usize>,
    /// Stabilizer added to the mean log intensity.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Surface-labeling specularity threshold in dB.
    #[arg(long, global = true)]
    threshold_db: Option<f64>,
    /// Master seed for all randomized commands.
    #[arg(long, global = true)]
    master_seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::FileLoad {
                    file: path.display().to_string(),
                    source: Box::new(e.into()),
                })?;
                serde_json::from_str(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &self.manifest {
            config.manifest = Some(v.clone());
        }
        if let Some(v) = self.bin_size {
            config.bin_size = v;
        }
        if let Some(v) = self.min_points {
            config.min_points = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.threshold_db {
            config.threshold_db = v;
        }
        if let Some(v) = self.master_seed {
            config.master_seed = v;
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Parser)]
#[command(name = "specmap", version, about = "Surface reflectivity classification from LiDAR point clouds")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the dataset and report per-material point and patch counts.
    Ingest,
    /// Emit one CSV row of features per retained patch.
    Featurize,
    /// Train and score the classifiers on leave-surface-out splits.
    Evaluate {
        /// "fixed" for the canonical 10-train/4-test split, "sweep" for the
        /// k-sweep.
        #[arg(long, default_value = "fixed")]
        split: String,
        /// Restrict the sweep to a single k.
        #[arg(long)]
        k: Option<usize>,
        /// Repetitions per k in sweep mode.
        #[arg(long)]
        repeats: Option<usize>,
        /// Seed count averaged in fixed mode.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Predict every patch of the selected scans with a saved model.
    ScatterMap {
        /// Serialized model file from `evaluate`.
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated material names; default is every scan.
        #[arg(long)]
        materials: Option<String>,
    },
    /// Generate a synthetic scan from a JSON spec file.
    Synth {
        /// JSON file with SyntheticSurfaceSpec fields.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Write the bundled reference dataset (CSV scans plus manifest).
    Dataset {
        /// Output directory for the scans.
        #[arg(long)]
        dir: PathBuf,
        /// Generator seed.
        #[arg(long, default_value_t = DEFAULT_REFDATA_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.config.resolve() {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    let outcome = match &cli.command {
        Command::Ingest => cmd_ingest(&config),
        Command::Featurize => cmd_featurize(&config),
        Command::Evaluate {
            split,
            k,
            repeats,
            seeds,
        } => cmd_evaluate(&config, split, *k, *repeats, *seeds),
        Command::ScatterMap { model, materials } => {
            cmd_scatter_map(&config, model, materials.as_deref())
        }
        Command::Synth { spec } => cmd_synth(&config, spec),
        Command::Dataset { dir, seed } => cmd_dataset(dir, *seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit 2 for anything the user can fix (usage, config, data); 1 otherwise.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingColumn { .. }
        | Error::MalformedRow { .. }
        | Error::EmptyCloud
        | Error::NegativeIntensity { .. }
        | Error::DuplicateMaterial { .. }
        | Error::FileLoad { .. }
        | Error::KTooLarge { .. }
        | Error::UnknownTestSurface { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidSpec(_)
        | Error::InvalidConfig(_)
        | Error::UnsupportedModelVersion(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

fn load_from_config(config: &RunConfig) -> Result<Dataset> {
    let manifest_path = config
        .manifest
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no manifest given; pass --manifest".into()))?;
    let manifest = DatasetManifest::from_path(manifest_path).map_err(|e| match e {
        e @ Error::FileLoad { .. } => e,
        e => Error::FileLoad {
            file: manifest_path.display().to_string(),
            source: Box::new(e),
        },
    })?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));
    load_dataset(&manifest, base_dir, &CsvSchema::default())
}

fn grids_for(dataset: &Dataset, config: &RunConfig) -> Result<Vec<PatchGrid>> {
    dataset
        .scans
        .iter()
        .map(|s| partition_into_patches(s, config.bin_size, config.min_points))
        .collect()
}

fn open_output(config: &RunConfig, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(&config.output_dir)?;
    Ok(BufWriter::new(File::create(config.output_dir.join(name))?))
}

/// First line of every report CSV: the effective config as a `#` comment.
fn config_comment(config: &RunConfig) -> String {
    format!("# config: {}", serde_json::to_string(config).unwrap())
}

fn write_json_report<T: Serialize>(config: &RunConfig, name: &str, payload: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Report<'a, T> {
        config: &'a RunConfig,
        result: &'a T,
    }
    let mut w = open_output(config, name)?;
    serde_json::to_writer_pretty(&mut w, &Report { config, result: payload })?;
    writeln!(w)?;
    Ok(())
}

fn cmd_ingest(config: &RunConfig) -> Result<()> {
    let dataset = load_from_config(config)?;
    let report = patch_count_report(&dataset, config.bin_size, config.min_points)?;
    let mut csv = open_output(config, "ingest_report.csv")?;
    writeln!(csv, "{}", config_comment(config))?;
    writeln!(csv, "material,points,patches")?;
    for row in &report.rows {
        writeln!(csv, "{},{},{}", row.material, row.points, row.patches)?;
        println!("{:<18} {:>7} points {:>5} patches", row.material, row.points, row.patches);
    }
    println!("total              {:>7} points {:>5} patches", report.total_points, report.total_patches);
    write_json_report(config, "ingest_report.json", &report)?;
    Ok(())
}

fn cmd_featurize(config: &RunConfig) -> Result<()> {
    let dataset = load_from_config(config)?;
    let grids = grids_for(&dataset, config)?;
    let table = feature_matrix(&dataset, &grids, config.epsilon)?;
    let mut csv = open_output(config, "features.csv")?;
    writeln!(csv, "{}", config_comment(config))?;
    writeln!(
        csv,
        "material,grid_u,grid_v,mean_elevation_angle,log_linear_max,log_linear_mean,\
         max_to_mean_ratio,mean_linear,specularity_db,label"
    )?;
    for i in 0..table.len() {
        let id = &table.provenance[i];
        let f = &table.full[i];
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            id.material,
            id.grid_u,
            id.grid_v,
            f.mean_elevation_angle,
            f.log_linear_max,
            f.log_linear_mean,
            f.max_to_mean_ratio,
            f.mean_linear,
            f.specularity_db,
            table.labels[i].as_str(),
        )?;
    }
    println!(
        "wrote {} patch rows across {} materials",
        table.len(),
        table.materials().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct FixedModelSummary {
    model: String,
    mean_accuracy: f64,
    mean_low_recall: f64,
    mean_semi_recall: f64,
}

#[derive(Serialize)]
struct FixedReport {
    seeds: usize,
    summaries: Vec<FixedModelSummary>,
    runs: Vec<Vec<RunResult>>,
}

fn cmd_evaluate(
    config: &RunConfig,
    split: &str,
    k: Option<usize>,
    repeats: Option<usize>,
    seeds: Option<usize>,
) -> Result<()> {
    let dataset = load_from_config(config)?;
    let grids = grids_for(&dataset, config)?;
    let table = feature_matrix(&dataset, &grids, config.epsilon)?;
    let test: Vec<String> = DEFAULT_TEST_SURFACES.iter().map(|s| s.to_string()).collect();
    match split {
        "fixed" => {
            let train: Vec<String> =
                FIXED_TRAINING_SURFACES.iter().map(|s| s.to_string()).collect();
            let split = split_from_materials(&table, &train, &test)?;
            let n_seeds = seeds.unwrap_or(config.seeds);
            let mut runs: Vec<Vec<RunResult>> = Vec::new();
            for rep in 0..n_seeds as u64 {
                let base = derive_seed(config.master_seed, &[rep]);
                let mut suite = config.models.clone();
                if let Some(f) = &mut suite.forest {
                    f.seed = derive_seed(base, &[1]);
                }
                if let Some(b) = &mut suite.boosted {
                    b.seed = derive_seed(base, &[2]);
                }
                if let Some(m) = &mut suite.mlp {
                    m.seed = derive_seed(base, &[3]);
                }
                let (results, models) = evaluate_once_with_models(&table, &split, &suite)?;
                if rep == 0 {
                    // PR curves and serialized models from the first seed.
                    let test_labels: Vec<_> =
                        split.test_indices.iter().map(|&i| table.labels[i]).collect();
                    for model in &models {
                        let rows: Vec<Vec<f64>> = split
                            .test_indices
                            .iter()
                            .map(|&i| table.rows[i].to_vec())
                            .collect();
                        let probs: Vec<f64> = model
                            .predict_batch(&rows)?
                            .iter()
                            .map(|p| p.probabilities[1])
                            .collect();
                        let curve = pr_curve(&test_labels, &probs)?;
                        let mut csv = open_output(config, &format!("pr_{}.csv", model.id()))?;
                        writeln!(csv, "{}", config_comment(config))?;
                        writeln!(csv, "threshold,precision,recall")?;
                        for p in &curve.points {
                            writeln!(csv, "{},{},{}", p.threshold, p.precision, p.recall)?;
                        }
                        let w = open_output(config, &format!("model_{}.json", model.id()))?;
                        save_model(model, w)?;
                    }
                }
                runs.push(results);
            }
            let model_ids: Vec<String> = runs[0].iter().map(|r| r.model_id.clone()).collect();
            let mut summaries = Vec::new();
            for id in &model_ids {
                let per: Vec<&RunResult> = runs
                    .iter()
                    .flat_map(|rs| rs.iter().filter(|r| &r.model_id == id))
                    .collect();
                let n = per.len() as f64;
                let summary = FixedModelSummary {
                    model: id.clone(),
                    mean_accuracy: per.iter().map(|r| r.accuracy).sum::<f64>() / n,
                    mean_low_recall: per.iter().map(|r| r.per_class[0].recall).sum::<f64>() / n,
                    mean_semi_recall: per.iter().map(|r| r.per_class[1].recall).sum::<f64>() / n,
                };
                println!(
                    "{:<8} accuracy {:.3}  low recall {:.3}  semi recall {:.3}  ({n} seeds)",
                    summary.model,
                    summary.mean_accuracy,
                    summary.mean_low_recall,
                    summary.mean_semi_recall
                );
                summaries.push(summary);
            }
            let report = FixedReport {
                seeds: n_seeds,
                summaries,
                runs,
            };
            write_json_report(config, "fixed_results.json", &report)?;
        }
        "sweep" => {
            let k_values: Vec<usize> = match k {
                Some(k) => vec![k],
                None => (config.k_min..=config.k_max).collect(),
            };
            let repeats = repeats.unwrap_or(config.repeats);
            let available = table
                .materials()
                .iter()
                .filter(|m| !test.contains(m))
                .count();
            if let Some(&k) = k_values.iter().find(|&&k| k > available) {
                return Err(Error::KTooLarge { k, available });
            }
            let report = sweep(
                &table,
                &k_values,
                repeats,
                &test,
                &config.models,
                config.master_seed,
            )?;
            let mut csv = open_output(config, "sweep_summary.csv")?;
            writeln!(csv, "{}", config_comment(config))?;
            writeln!(csv, "k,model,mean_accuracy,std_accuracy,max_accuracy,repetitions")?;
            for e in &report.entries {
                writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    e.k, e.model, e.mean_accuracy, e.std_accuracy, e.max_accuracy, e.repetitions
                )?;
                println!(
                    "k={:<2} {:<8} mean {:.3} std {:.3}",
                    e.k, e.model, e.mean_accuracy, e.std_accuracy
                );
            }
            write_json_report(config, "sweep_report.json", &report)?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown split mode '{other}'; use fixed or sweep"
            )))
        }
    }
    Ok(())
}

fn cmd_scatter_map(config: &RunConfig, model_path: &Path, materials: Option<&str>) -> Result<()> {
    let dataset = load_from_config(config)?;
    let model = load_model(File::open(model_path).map_err(|e| Error::FileLoad {
        file: model_path.display().to_string(),
        source: Box::new(e.into()),
    })?)?;
    let selected: Vec<String> = match materials {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => dataset.material_names(),
    };
    let mut scans = Vec::new();
    for name in &selected {
        let scan = dataset
            .scan(name)
            .ok_or_else(|| Error::UnknownTestSurface { name: name.clone() })?;
        scans.push(scan.clone());
    }
    let subset = Dataset { scans };
    let grids = grids_for(&subset, config)?;
    let map = build_scatter_map(&subset, &grids, &model, config.epsilon)?;
    let mut csv = open_output(config, "scatter_map.csv")?;
    writeln!(csv, "{}", config_comment(config))?;
    writeln!(csv, "material,grid_u,grid_v,x,y,z,predicted,p_semi")?;
    for r in &map.records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.material,
            r.grid_u,
            r.grid_v,
            r.center[0],
            r.center[1],
            r.center[2],
            r.predicted.as_str(),
            r.p_semi
        )?;
    }
    println!("wrote {} patch predictions for {} scans", map.records.len(), selected.len());
    Ok(())
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    spec: &'a SyntheticSurfaceSpec,
    config: &'a RunConfig,
    surface_specularity_db: f64,
    true_class: &'static str,
}

fn cmd_synth(config: &RunConfig, spec_path: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::FileLoad {
        file: spec_path.display().to_string(),
        source: Box::new(e.into()),
    })?;
    let spec: SyntheticSurfaceSpec = serde_json::from_str(&text)?;
    let scan = generate_scan(&spec)?;
    let specularity = surface_specularity(&scan)?;
    let class = assign_class(specularity, config.threshold_db);
    fs::create_dir_all(&config.output_dir)?;
    let csv_path = config.output_dir.join(format!("{}.csv", spec.name));
    write_scan_csv(&scan, BufWriter::new(File::create(&csv_path)?))?;
    let sidecar = SynthSidecar {
        spec: &spec,
        config,
        surface_specularity_db: specularity,
        true_class: class.as_str(),
    };
    let mut w = open_output(config, &format!("{}.json", spec.name))?;
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    writeln!(w)?;
    println!(
        "{}: {} points, surface specularity {:.2} dB -> {}",
        spec.name,
        scan.points.len(),
        specularity,
        class.as_str()
    );
    Ok(())
}

fn cmd_dataset(dir: &Path, seed: u64) -> Result<()> {
    let manifest = write_reference_dataset(dir, seed)?;
    println!(
        "wrote {} scans and manifest.json to {}",
        manifest.entries.len(),
        dir.display()
    );
    Ok(())
}

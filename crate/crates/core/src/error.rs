//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column '{column}' in CSV header")]
    MissingColumn { column: String },

    #[error("malformed row {row}: {detail}")]
    MalformedRow { row: usize, detail: String },

    #[error("point cloud has no data rows")]
    EmptyCloud,

    #[error("negative intensity value {value}")]
    NegativeIntensity { value: f64 },

    #[error("duplicate material '{name}' in manifest")]
    DuplicateMaterial { name: String },

    #[error("failed to load '{file}': {source}")]
    FileLoad {
        file: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate cloud: fewer than 3 non-collinear points")]
    DegenerateCloud,

    #[error("point has zero horizontal range; elevation angle undefined")]
    ZeroHorizontalRange,

    #[error("all intensities are zero; specularity undefined")]
    AllZeroIntensities,

    #[error("empty patch")]
    EmptyPatch,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("training set contains a single class")]
    SingleClassTrainingSet,

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature {index} has zero variance; cannot standardize")]
    DegenerateFeature { index: usize },

    #[error("k = {k} exceeds the {available} surfaces available for training")]
    KTooLarge { k: usize, available: usize },

    #[error("test surface '{name}' not present in dataset")]
    UnknownTestSurface { name: String },

    #[error("labels contain a single class; curve undefined")]
    SingleClassLabels,

    #[error("grazing incidence: angle must be in [0, pi/2)")]
    GrazingIncidence,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unsupported model format version {0}")]
    UnsupportedModelVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

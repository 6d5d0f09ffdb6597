//! Point-cloud CSV ingestion: per-surface scans, intensity linearization,
//! and manifest-driven dataset loading.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary surface class. Index 0 is low-specular, index 1 semi-specular;
/// tie-breaking and confusion-matrix ordering rely on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceClass {
    #[serde(rename = "low")]
    LowSpecular,
    #[serde(rename = "semi")]
    SemiSpecular,
}

impl SurfaceClass {
    pub fn index(self) -> usize {
        match self {
            SurfaceClass::LowSpecular => 0,
            SurfaceClass::SemiSpecular => 1,
        }
    }

    pub fn from_index(i: usize) -> SurfaceClass {
        if i == 0 {
            SurfaceClass::LowSpecular
        } else {
            SurfaceClass::SemiSpecular
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceClass::LowSpecular => "low",
            SurfaceClass::SemiSpecular => "semi",
        }
    }
}

/// One LiDAR return in the sensor frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity_raw: f64,
    pub intensity_linear: f64,
    /// Scanning ring index, 0-7 for the 8-ring sensor.
    pub ring: Option<u8>,
}

impl LidarPoint {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A named material's full cropped cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceScan {
    pub material_name: String,
    pub canonical_class: Option<SurfaceClass>,
    pub points: Vec<LidarPoint>,
}

/// How raw sensor intensity maps to linear reflectance units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IntensityMode {
    #[default]
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "db")]
    DbToLinear,
}

/// raw -> linear reflectance. `Identity` passes the value through;
/// `DbToLinear` interprets raw as decibels.
pub fn linearize_intensity(raw: f64, mode: IntensityMode) -> Result<f64> {
    if !raw.is_finite() || raw < 0.0 {
        return Err(Error::NegativeIntensity { value: raw });
    }
    Ok(match mode {
        IntensityMode::Identity => raw,
        IntensityMode::DbToLinear => 10f64.powf(raw / 10.0),
    })
}

/// Column-name mapping for input CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub x: String,
    pub y: String,
    pub z: String,
    pub intensity: String,
    /// When set and the column exists, the ring index is read from it.
    pub ring: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            x: "x".into(),
            y: "y".into(),
            z: "z".into(),
            intensity: "intensity".into(),
            ring: Some("ring".into()),
        }
    }
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })
}

fn parse_field(record: &csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).ok_or_else(|| Error::MalformedRow {
        row,
        detail: format!("missing field '{name}'"),
    })?;
    let value: f64 = raw.trim().parse().map_err(|_| Error::MalformedRow {
        row,
        detail: format!("field '{name}' is not numeric: '{raw}'"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            row,
            detail: format!("field '{name}' is not finite"),
        });
    }
    Ok(value)
}

/// Parse a point-cloud CSV stream into a scan. Row order is preserved and
/// non-finite or non-numeric fields are hard errors.
pub fn parse_point_csv<R: Read>(
    reader: R,
    schema: &CsvSchema,
    mode: IntensityMode,
    material_name: &str,
    canonical_class: Option<SurfaceClass>,
) -> Result<SurfaceScan> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ix = find_column(&headers, &schema.x)?;
    let iy = find_column(&headers, &schema.y)?;
    let iz = find_column(&headers, &schema.z)?;
    let ii = find_column(&headers, &schema.intensity)?;
    let ir = match &schema.ring {
        Some(name) => headers.iter().position(|h| h.trim() == name),
        None => None,
    };

    let mut points = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let row = n + 2; // 1-based, counting the header line
        let record = record?;
        let x = parse_field(&record, ix, row, &schema.x)?;
        let y = parse_field(&record, iy, row, &schema.y)?;
        let z = parse_field(&record, iz, row, &schema.z)?;
        let intensity_raw = parse_field(&record, ii, row, &schema.intensity)?;
        if intensity_raw < 0.0 {
            return Err(Error::MalformedRow {
                row,
                detail: format!("negative intensity {intensity_raw}"),
            });
        }
        let intensity_linear = linearize_intensity(intensity_raw, mode)?;
        let ring = match ir {
            Some(idx) => {
                let v = parse_field(&record, idx, row, "ring")?;
                let r = v as i64;
                if (v - r as f64).abs() > 0.0 || !(0..=7).contains(&r) {
                    return Err(Error::MalformedRow {
                        row,
                        detail: format!("ring index {v} outside 0-7"),
                    });
                }
                Some(r as u8)
            }
            None => None,
        };
        points.push(LidarPoint {
            x,
            y,
            z,
            intensity_raw,
            intensity_linear,
            ring,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(SurfaceScan {
        material_name: material_name.to_string(),
        canonical_class,
        points,
    })
}

/// Write a scan back out in the input CSV schema. Floats use shortest
/// round-trip formatting, so a load/write/load cycle is bit-exact.
pub fn write_scan_csv<W: Write>(scan: &SurfaceScan, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let has_ring = scan.points.iter().any(|p| p.ring.is_some());
    if has_ring {
        w.write_record(["x", "y", "z", "intensity", "ring"])?;
    } else {
        w.write_record(["x", "y", "z", "intensity"])?;
    }
    for p in &scan.points {
        let mut rec = vec![
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            p.intensity_raw.to_string(),
        ];
        if has_ring {
            rec.push(p.ring.unwrap_or(0).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One manifest line: a material, its CSV, its label, and how to linearize.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub material: String,
    pub path: PathBuf,
    pub class: ClassLabel,
    #[serde(default)]
    pub intensity_mode: IntensityMode,
}

/// Manifest class field: the two classes or explicit "unlabeled".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Semi,
    Low,
    Unlabeled,
}

impl ClassLabel {
    pub fn to_class(self) -> Option<SurfaceClass> {
        match self {
            ClassLabel::Semi => Some(SurfaceClass::SemiSpecular),
            ClassLabel::Low => Some(SurfaceClass::LowSpecular),
            ClassLabel::Unlabeled => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_path(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path)?;
        let manifest: DatasetManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        let mut paths = HashSet::new();
        for entry in &self.entries {
            if entry.material.is_empty() {
                return Err(Error::InvalidConfig("empty material name".into()));
            }
            if !names.insert(entry.material.clone()) {
                return Err(Error::DuplicateMaterial {
                    name: entry.material.clone(),
                });
            }
            if !paths.insert(entry.path.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate path {}",
                    entry.path.display()
                )));
            }
        }
        Ok(())
    }
}

/// An immutable set of loaded scans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub scans: Vec<SurfaceScan>,
}

impl Dataset {
    pub fn total_points(&self) -> usize {
        self.scans.iter().map(|s| s.points.len()).sum()
    }

    pub fn scan(&self, material: &str) -> Option<&SurfaceScan> {
        self.scans.iter().find(|s| s.material_name == material)
    }

    pub fn material_names(&self) -> Vec<String> {
        self.scans.iter().map(|s| s.material_name.clone()).collect()
    }
}

/// Load every manifest entry. Relative paths resolve against `base_dir`.
pub fn load_dataset(manifest: &DatasetManifest, base_dir: &Path, schema: &CsvSchema) -> Result<Dataset> {
    manifest.validate()?;
    let mut scans = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base_dir.join(&entry.path)
        };
        let wrap = |e: Error| Error::FileLoad {
            file: path.display().to_string(),
            source: Box::new(e),
        };
        let file = std::fs::File::open(&path).map_err(|e| wrap(e.into()))?;
        let scan = parse_point_csv(
            std::io::BufReader::new(file),
            schema,
            entry.intensity_mode,
            &entry.material,
            entry.class.to_class(),
        )
        .map_err(wrap)?;
        scans.push(scan);
    }
    Ok(Dataset { scans })
}

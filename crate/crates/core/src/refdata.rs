//! Bundled reference dataset.
//!
//! Deterministically regenerates a 15-surface indoor scan collection with
//! the published per-material point counts, so the full pipeline runs
//! without any external download. Each material is a vertical planar sheet
//! sampled on a 3 cm cell lattice; cell intensity regimes (diffuse, glint,
//! hot-spot) are drawn per cell so patch-level feature structure is stable
//! across runs. Set `SURFACE_DATA_DIR` to point the tooling at a real
//! capture instead.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud_io::{
    write_scan_csv, ClassLabel, Dataset, DatasetManifest, IntensityMode, LidarPoint,
    ManifestEntry, SurfaceScan,
};
use crate::error::Result;
use crate::learners::derive_seed;

pub const DEFAULT_REFDATA_SEED: u64 = 7;

/// Lattice pitch shared with the patching stage.
const CELL: f64 = 0.03;
/// In-cell sampling margin keeps every point inside its lattice cell even
/// after the exact-centroid shift below.
const MARGIN: f64 = 0.004;

/// Generation recipe for one material sheet.
#[derive(Debug, Clone)]
pub struct RefMaterial {
    pub name: &'static str,
    pub class: ClassLabel,
    pub n_points: usize,
    /// Lattice columns (width = n_u * 3 cm). Even so cell edges land on the
    /// centroid-relative bin edges used downstream.
    pub n_u: usize,
    /// Lattice rows (height = n_v * 3 cm). Even for the same reason.
    pub n_v: usize,
    /// Horizontal standoff of the sheet from the sensor, metres.
    pub standoff: f64,
    /// Height of the sheet's bottom edge above the sensor plane, metres.
    pub z_offset: f64,
    /// Diffuse return level in linear units (fallback when
    /// `dull_base_range` is unset).
    pub base: f64,
    /// Log-normal sigma of the diffuse returns.
    pub noise_sigma: f64,
    /// Fraction of cells containing one specular glint point.
    pub glint_fraction: f64,
    /// Glint level expressed in ln(1 + intensity) units; each glint draws
    /// uniformly from this interval, so a single-cell patch's log-linear
    /// maximum lands inside it.
    pub glint_log_range: (f64, f64),
    /// Cells carrying a single saturating retro-reflection.
    pub hot_cells: usize,
    /// Cells carrying one bright (but unsaturated) return, e.g. polished
    /// mounting tacks; independent of the glint population.
    pub bright_cells: usize,
    /// ln(1 + intensity) interval for the bright cells.
    pub bright_log_range: (f64, f64),
    /// Lattice rows at the (bottom, top) edges whose cells stay diffuse:
    /// panel mounting frames shadow the grazing-angle rows of the polished
    /// sheets, so their edges return only dull levels.
    pub edge_dull_rows: (usize, usize),
    /// Diffuse levels drift with micro-facet orientation; when set, every
    /// cell draws its own base from this range.
    pub dull_base_range: Option<(f64, f64)>,
}

/// ln(1 + intensity) of a saturating retro-reflection.
const HOT_LOG: f64 = 7.5;

/// The fifteen surfaces of the reference collection.
pub fn reference_materials() -> Vec<RefMaterial> {
    // Diffuse returns are statistically identical across dull materials;
    // only mounting height tells them apart. The room-wall sheets also show
    // occasional mild sparkle (staples, varnish flecks) that sits in the
    // same log-intensity band as the metals' weaker glints.
    let dull_band = Some((3.0, 9.0));
    let mild_sparkle = (3.6, 4.15);
    let diffuse = |name, n_points, n_u, n_v, standoff, z_offset, sparkle: f64| RefMaterial {
        name,
        class: ClassLabel::Low,
        n_points,
        n_u,
        n_v,
        standoff,
        z_offset,
        base: 6.0,
        noise_sigma: 0.30,
        glint_fraction: sparkle,
        glint_log_range: mild_sparkle,
        hot_cells: 0,
        bright_cells: 0,
        bright_log_range: (0.0, 0.0),
        edge_dull_rows: (0, 0),
        dull_base_range: dull_band,
    };
    vec![
        // Semi-specular sheets mounted close to the sensor so their patches
        // span the full elevation range.
        RefMaterial {
            name: "metal_copper",
            class: ClassLabel::Semi,
            n_points: 4896,
            n_u: 18,
            n_v: 8,
            standoff: 0.30,
            z_offset: 0.010,
            base: 6.0,
            noise_sigma: 0.30,
            glint_fraction: 1.0,
            glint_log_range: (3.8, 4.3),
            hot_cells: 3,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 0),
            dull_base_range: dull_band,
        },
        RefMaterial {
            name: "metal_tin",
            class: ClassLabel::Semi,
            n_points: 4780,
            n_u: 16,
            n_v: 6,
            standoff: 0.30,
            z_offset: 0.010,
            base: 6.0,
            noise_sigma: 0.30,
            glint_fraction: 0.66,
            glint_log_range: (3.8, 4.6),
            hot_cells: 3,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 0),
            dull_base_range: dull_band,
        },
        RefMaterial {
            name: "whiteboard",
            class: ClassLabel::Semi,
            n_points: 4940,
            n_u: 10,
            n_v: 8,
            standoff: 0.30,
            z_offset: 0.010,
            base: 6.0,
            noise_sigma: 0.30,
            glint_fraction: 1.0,
            glint_log_range: (6.6, 6.9),
            hot_cells: 3,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 0),
            dull_base_range: dull_band,
        },
        RefMaterial {
            name: "linoleum",
            class: ClassLabel::Semi,
            n_points: 5189,
            n_u: 10,
            n_v: 8,
            standoff: 0.42,
            z_offset: 0.010,
            base: 6.0,
            noise_sigma: 0.30,
            glint_fraction: 1.0,
            glint_log_range: (5.5, 6.0),
            hot_cells: 3,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 1),
            dull_base_range: dull_band,
        },
        RefMaterial {
            name: "tv",
            class: ClassLabel::Semi,
            n_points: 4993,
            n_u: 14,
            n_v: 6,
            standoff: 0.30,
            z_offset: 0.010,
            base: 6.0,
            noise_sigma: 0.30,
            glint_fraction: 0.585,
            glint_log_range: (5.5, 6.0),
            hot_cells: 3,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 0),
            dull_base_range: dull_band,
        },
        // The projector screen is bright and gently retro-reflective yet
        // still labeled low; every cell carries a moderate hotspot.
        RefMaterial {
            name: "projector_screen",
            class: ClassLabel::Low,
            n_points: 4994,
            n_u: 10,
            n_v: 8,
            standoff: 0.90,
            z_offset: 0.13,
            base: 15.0,
            noise_sigma: 0.18,
            glint_fraction: 1.0,
            glint_log_range: (4.8, 5.0),
            hot_cells: 0,
            bright_cells: 0,
            bright_log_range: (0.0, 0.0),
            edge_dull_rows: (0, 0),
            dull_base_range: None,
        },
        // Diffuse sheets mounted at staggered heights across the room.
        diffuse("carpet", 3193, 16, 6, 2.5, 0.087, 0.14),
        diffuse("corkboard", 4965, 14, 6, 2.5, 0.263, 0.14),
        diffuse("cardboard", 5010, 14, 6, 2.5, 0.441, 0.14),
        diffuse("rough_wood", 5048, 14, 6, 2.5, 0.623, 0.14),
        diffuse("drywall", 5032, 12, 6, 2.5, 0.812, 0.14),
        diffuse("smooth_wood", 5073, 14, 6, 2.5, 0.990, 0.14),
        diffuse("concrete_wall", 5025, 14, 6, 2.5, 1.166, 0.14),
        // Held-out foam and fabric sheets are matte but a shade brighter
        // than the room walls, and each is pinned up with a few polished
        // metal tacks whose returns outshine the weave; they sit closer so
        // each spans several of the trainers' elevation bands.
        RefMaterial {
            name: "styrofoam",
            class: ClassLabel::Low,
            n_points: 4977,
            n_u: 12,
            n_v: 6,
            standoff: 0.84,
            z_offset: 0.029,
            base: 9.0,
            noise_sigma: 0.30,
            glint_fraction: 0.042,
            glint_log_range: (4.18, 4.28),
            hot_cells: 0,
            bright_cells: 1,
            bright_log_range: (4.78, 4.92),
            edge_dull_rows: (0, 0),
            dull_base_range: Some((11.0, 17.0)),
        },
        RefMaterial {
            name: "fabric_pinboard",
            class: ClassLabel::Low,
            n_points: 4984,
            n_u: 14,
            n_v: 6,
            standoff: 0.62,
            z_offset: 0.155,
            base: 9.0,
            noise_sigma: 0.30,
            glint_fraction: 0.024,
            glint_log_range: (4.18, 4.28),
            hot_cells: 0,
            bright_cells: 1,
            bright_log_range: (4.78, 4.92),
            edge_dull_rows: (0, 0),
            dull_base_range: Some((11.0, 17.0)),
        },
    ]
}

#[derive(Clone, Copy, PartialEq)]
enum CellRegime {
    Diffuse,
    Glint,
    Hot,
    Bright,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generate one material's cloud. The same (material, seed) pair always
/// produces the identical point list.
pub fn generate_reference_scan(mat: &RefMaterial, seed: u64) -> SurfaceScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_cells = mat.n_u * mat.n_v;
    let width = mat.n_u as f64 * CELL;
    let height = mat.n_v as f64 * CELL;

    // Distribute points across cells as evenly as possible; spread the
    // remainder over a shuffled prefix.
    let q = mat.n_points / n_cells;
    let r = mat.n_points % n_cells;
    let mut order: Vec<usize> = (0..n_cells).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let mut counts = vec![q; n_cells];
    for &cell in order.iter().take(r) {
        counts[cell] += 1;
    }

    // Assign cell regimes. The frame-shadowed edge rows stay diffuse; the
    // remaining cells get a few hot cells, an exact share of glint cells,
    // and diffuse for the rest.
    let (edge_bottom, edge_top) = mat.edge_dull_rows;
    let mut interior: Vec<usize> = (0..n_cells)
        .filter(|cell| {
            let iv = cell / mat.n_u;
            iv >= edge_bottom && iv < mat.n_v - edge_top
        })
        .collect();
    interior.shuffle(&mut rng);
    let n_glint = (mat.glint_fraction * interior.len() as f64).round() as usize;
    let mut regimes = vec![CellRegime::Diffuse; n_cells];
    let n_glint = n_glint.min(interior.len().saturating_sub(mat.hot_cells + mat.bright_cells));
    for (i, &cell) in interior.iter().enumerate() {
        if i < mat.hot_cells {
            regimes[cell] = CellRegime::Hot;
        } else if i < mat.hot_cells + mat.bright_cells {
            regimes[cell] = CellRegime::Bright;
        } else if i < mat.hot_cells + mat.bright_cells + n_glint {
            regimes[cell] = CellRegime::Glint;
        }
    }

    let mut us = Vec::with_capacity(mat.n_points);
    let mut vs = Vec::with_capacity(mat.n_points);
    let mut intensities = Vec::with_capacity(mat.n_points);
    let mut rings = Vec::with_capacity(mat.n_points);

    for cell in 0..n_cells {
        let iu = cell % mat.n_u;
        let iv = cell / mat.n_u;
        let u_lo = iu as f64 * CELL + MARGIN;
        let u_hi = (iu + 1) as f64 * CELL - MARGIN;
        let v_lo = iv as f64 * CELL + MARGIN;
        let v_hi = (iv + 1) as f64 * CELL - MARGIN;
        let cell_base = match mat.dull_base_range {
            Some((lo, hi)) => rng.gen_range(lo..hi),
            None => mat.base,
        };
        for k in 0..counts[cell] {
            us.push(rng.gen_range(u_lo..u_hi));
            vs.push(rng.gen_range(v_lo..v_hi));
            let level = if k == 0 {
                match regimes[cell] {
                    CellRegime::Hot => (HOT_LOG + 0.05 * gaussian(&mut rng)).exp() - 1.0,
                    CellRegime::Glint => {
                        let (lo, hi) = mat.glint_log_range;
                        rng.gen_range(lo..hi).exp() - 1.0
                    }
                    CellRegime::Bright => {
                        let (lo, hi) = mat.bright_log_range;
                        rng.gen_range(lo..hi).exp() - 1.0
                    }
                    CellRegime::Diffuse => {
                        cell_base * (mat.noise_sigma * gaussian(&mut rng)).exp()
                    }
                }
            } else {
                cell_base * (mat.noise_sigma * gaussian(&mut rng)).exp()
            };
            intensities.push(level);
            rings.push((iv % 8) as u8);
        }
    }

    // Shift the sheet so its empirical centroid sits exactly on the cell
    // lattice; downstream bins are centroid-relative, so this keeps every
    // lattice cell a bin.
    let mean_u = us.iter().sum::<f64>() / us.len() as f64;
    let mean_v = vs.iter().sum::<f64>() / vs.len() as f64;
    let du = width / 2.0 - mean_u;
    let dv = height / 2.0 - mean_v;
    debug_assert!(du.abs() < MARGIN && dv.abs() < MARGIN);

    let points = us
        .iter()
        .zip(&vs)
        .zip(intensities.iter().zip(&rings))
        .map(|((&u, &v), (&intensity, &ring))| LidarPoint {
            x: u + du - width / 2.0,
            y: mat.standoff,
            z: v + dv + mat.z_offset,
            intensity_raw: intensity,
            intensity_linear: intensity,
            ring: Some(ring),
        })
        .collect();

    SurfaceScan {
        material_name: mat.name.to_string(),
        canonical_class: mat.class.to_class(),
        points,
    }
}

/// Generate the full in-memory collection.
pub fn generate_reference_dataset(master_seed: u64) -> Dataset {
    let scans = reference_materials()
        .iter()
        .enumerate()
        .map(|(i, mat)| generate_reference_scan(mat, derive_seed(master_seed, &[i as u64])))
        .collect();
    Dataset { scans }
}

/// Write the collection as per-material CSVs plus a manifest.json in `dir`.
pub fn write_reference_dataset(dir: &Path, master_seed: u64) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (i, mat) in reference_materials().iter().enumerate() {
        let scan = generate_reference_scan(mat, derive_seed(master_seed, &[i as u64]));
        let file_name = format!("{}.csv", mat.name);
        let file = std::fs::File::create(dir.join(&file_name))?;
        write_scan_csv(&scan, std::io::BufWriter::new(file))?;
        entries.push(ManifestEntry {
            material: mat.name.to_string(),
            path: file_name.into(),
            class: mat.class,
            intensity_mode: IntensityMode::Identity,
        });
    }
    let manifest = DatasetManifest { entries };
    manifest.validate()?;
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

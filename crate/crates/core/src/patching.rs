//! Dominant-plane fitting and fixed-size square binning of scans into
//! patches.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::cloud_io::{Dataset, SurfaceScan};
use crate::error::{Error, Result};

pub const DEFAULT_BIN_SIZE: f64 = 0.03;
pub const DEFAULT_MIN_POINTS: usize = 5;

/// Least-squares plane through a cloud, with an in-plane orthonormal basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfacePlane {
    pub centroid: [f64; 3],
    /// Greatest-variance in-plane axis.
    pub basis_u: [f64; 3],
    /// normal x basis_u.
    pub basis_v: [f64; 3],
    /// Least-variance axis.
    pub normal: [f64; 3],
}

impl SurfacePlane {
    /// Project a 3-D point to (u, v) plane coordinates relative to the centroid.
    pub fn project(&self, p: [f64; 3]) -> (f64, f64) {
        let d = [
            p[0] - self.centroid[0],
            p[1] - self.centroid[1],
            p[2] - self.centroid[2],
        ];
        let u = d[0] * self.basis_u[0] + d[1] * self.basis_u[1] + d[2] * self.basis_u[2];
        let v = d[0] * self.basis_v[0] + d[1] * self.basis_v[1] + d[2] * self.basis_v[2];
        (u, v)
    }

    /// Map plane coordinates back to 3-D.
    pub fn unproject(&self, u: f64, v: f64) -> [f64; 3] {
        [
            self.centroid[0] + u * self.basis_u[0] + v * self.basis_v[0],
            self.centroid[1] + u * self.basis_u[1] + v * self.basis_v[1],
            self.centroid[2] + u * self.basis_u[2] + v * self.basis_v[2],
        ]
    }

    /// Signed orthogonal distance from the plane.
    pub fn residual(&self, p: [f64; 3]) -> f64 {
        let d = [
            p[0] - self.centroid[0],
            p[1] - self.centroid[1],
            p[2] - self.centroid[2],
        ];
        d[0] * self.normal[0] + d[1] * self.normal[1] + d[2] * self.normal[2]
    }
}

/// Flip `v` so its largest-magnitude component is positive. Keeps fitted
/// bases deterministic across eigen-solver sign conventions.
fn fix_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut dominant = 0;
    for i in 1..3 {
        if v[i].abs() > v[dominant].abs() {
            dominant = i;
        }
    }
    if v[dominant] < 0.0 {
        -v
    } else {
        v
    }
}

/// Fit the plane minimizing squared orthogonal distance via the principal
/// axes of the centered covariance.
pub fn fit_surface_plane(points: &[[f64; 3]]) -> Result<SurfacePlane> {
    if points.len() < 3 {
        return Err(Error::DegenerateCloud);
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for i in 0..3 {
            centroid[i] += p[i];
        }
    }
    for c in &mut centroid {
        *c /= n;
    }
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]);
        cov += d * d.transpose();
    }
    cov /= n;

    let eigen = cov.symmetric_eigen();
    // Order axes by descending variance.
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
    });
    let major = eigen.eigenvalues[order[0]];
    let middle = eigen.eigenvalues[order[1]];
    // Collinear clouds have a single non-trivial axis.
    if middle <= 1e-18 * major.max(1e-300) || major <= 0.0 {
        return Err(Error::DegenerateCloud);
    }

    let basis_u = fix_sign(eigen.eigenvectors.column(order[0]).into_owned()).normalize();
    let normal = fix_sign(eigen.eigenvectors.column(order[2]).into_owned()).normalize();
    let basis_v = normal.cross(&basis_u).normalize();

    Ok(SurfacePlane {
        centroid,
        basis_u: [basis_u[0], basis_u[1], basis_u[2]],
        basis_v: [basis_v[0], basis_v[1], basis_v[2]],
        normal: [normal[0], normal[1], normal[2]],
    })
}

/// A square spatial bin of point indices on the fitted plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Patch {
    pub grid_u: i64,
    pub grid_v: i64,
    pub point_indices: Vec<usize>,
    /// Bin center mapped back to 3-D.
    pub center: [f64; 3],
}

/// All retained patches of one scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchGrid {
    pub material_name: String,
    pub bin_size: f64,
    pub plane: SurfacePlane,
    pub patches: Vec<Patch>,
    /// Bins dropped for having fewer than `min_points` members.
    pub discarded_count: usize,
}

impl PatchGrid {
    pub fn retained_point_count(&self) -> usize {
        self.patches.iter().map(|p| p.point_indices.len()).sum()
    }
}

/// Project every point into fitted-plane coordinates and bin into
/// half-open `bin_size` squares, `[k*s, (k+1)*s)`. The grid origin is the
/// per-axis minimum of the projected coordinates, so an axis-aligned sheet
/// whose extent is a multiple of `bin_size` bins without sliver rows.
pub fn partition_into_patches(
    scan: &SurfaceScan,
    bin_size: f64,
    min_points: usize,
) -> Result<PatchGrid> {
    if bin_size <= 0.0 {
        return Err(Error::InvalidConfig("bin_size must be positive".into()));
    }
    if min_points < 1 {
        return Err(Error::InvalidConfig("min_points must be >= 1".into()));
    }
    let positions: Vec<[f64; 3]> = scan.points.iter().map(|p| p.position()).collect();
    let plane = match fit_surface_plane(&positions) {
        Ok(plane) => plane,
        // A single point still forms its own patch; give it a trivial frame.
        Err(Error::DegenerateCloud) if !positions.is_empty() => SurfacePlane {
            centroid: positions[0],
            basis_u: [1.0, 0.0, 0.0],
            basis_v: [0.0, 1.0, 0.0],
            normal: [0.0, 0.0, 1.0],
        },
        Err(e) => return Err(e),
    };

    let projected: Vec<(f64, f64)> = positions.iter().map(|p| plane.project(*p)).collect();
    let min_u = projected.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_v = projected.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    let mut bins: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (idx, &(u, v)) in projected.iter().enumerate() {
        let gu = ((u - min_u) / bin_size).floor() as i64;
        let gv = ((v - min_v) / bin_size).floor() as i64;
        bins.entry((gu, gv)).or_default().push(idx);
    }

    let mut patches = Vec::new();
    let mut discarded_count = 0;
    for ((gu, gv), point_indices) in bins {
        if point_indices.len() < min_points {
            discarded_count += 1;
            continue;
        }
        let center = plane.unproject(
            min_u + (gu as f64 + 0.5) * bin_size,
            min_v + (gv as f64 + 0.5) * bin_size,
        );
        patches.push(Patch {
            grid_u: gu,
            grid_v: gv,
            point_indices,
            center,
        });
    }
    Ok(PatchGrid {
        material_name: scan.material_name.clone(),
        bin_size,
        plane,
        patches,
        discarded_count,
    })
}

/// Per-material point/patch accounting, plus a totals row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchCountReport {
    pub rows: Vec<PatchCountRow>,
    pub total_points: usize,
    pub total_patches: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchCountRow {
    pub material: String,
    pub points: usize,
    pub patches: usize,
}

pub fn patch_count_report(
    dataset: &Dataset,
    bin_size: f64,
    min_points: usize,
) -> Result<PatchCountReport> {
    let mut rows = Vec::new();
    let mut total_points = 0;
    let mut total_patches = 0;
    for scan in &dataset.scans {
        let grid = partition_into_patches(scan, bin_size, min_points)?;
        total_points += scan.points.len();
        total_patches += grid.patches.len();
        rows.push(PatchCountRow {
            material: scan.material_name.clone(),
            points: scan.points.len(),
            patches: grid.patches.len(),
        });
    }
    Ok(PatchCountReport {
        rows,
        total_points,
        total_patches,
    })
}

//! Roughness-scattering physics and synthetic labeled scan generation.
//!
//! Generated scans serialize to the same CSV schema as real ones, so the
//! whole pipeline runs unchanged on synthetic data. The intensity model
//! (base reflectivity attenuated by the scattering factor, plus a diffuse
//! floor and sensor noise) exists for oracle testing, not for reproducing
//! measured numbers.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud_io::{LidarPoint, SurfaceScan};
use crate::error::{Error, Result};
use crate::features::{assign_class, surface_specularity, DEFAULT_SPECULARITY_THRESHOLD_DB};

/// Wavelength and incidence geometry for the roughness criterion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WaveSpec {
    /// Wavelength in meters.
    pub wavelength: f64,
    /// Angle of incidence in radians, within [0, pi/2).
    pub incidence_angle: f64,
}

impl WaveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::InvalidSpec("wavelength must be positive".into()));
        }
        if !(self.incidence_angle >= 0.0)
            || self.incidence_angle >= std::f64::consts::FRAC_PI_2
            || self.incidence_angle.cos() <= 0.0
        {
            return Err(Error::GrazingIncidence);
        }
        Ok(())
    }
}

/// Surface RMS height.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoughnessSpec {
    pub h_rms: f64,
}

impl RoughnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_rms >= 0.0) || !self.h_rms.is_finite() {
            return Err(Error::InvalidSpec("h_rms must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Critical RMS height h_c = lambda / (8 cos theta_i).
pub fn rayleigh_threshold(wave: WaveSpec) -> Result<f64> {
    wave.validate()?;
    Ok(wave.wavelength / (8.0 * wave.incidence_angle.cos()))
}

/// Coherent-reflection attenuation exp[-8 (pi h_rms cos theta_i / lambda)^2].
pub fn scattering_factor(rough: RoughnessSpec, wave: WaveSpec) -> Result<f64> {
    rough.validate()?;
    wave.validate()?;
    let arg = std::f64::consts::PI * rough.h_rms * wave.incidence_angle.cos() / wave.wavelength;
    Ok((-8.0 * arg * arg).exp())
}

/// Rayleigh roughness test: strictly above the critical height.
pub fn is_rough(rough: RoughnessSpec, wave: WaveSpec) -> Result<bool> {
    rough.validate()?;
    Ok(rough.h_rms > rayleigh_threshold(wave)?)
}

/// Defaults mirror the acquisition geometry: sensor on a tripod about
/// 1.12 m from the surface, 905 nm LiDAR wavelength.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSurfaceSpec {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub point_spacing: f64,
    pub base_reflectivity: f64,
    pub h_rms: f64,
    pub diffuse_floor: f64,
    pub noise_std: f64,
    /// Sensor-to-surface distance in meters.
    pub standoff: f64,
    /// Carrier wavelength used in the scattering factor.
    pub wavelength: f64,
    pub seed: u64,
}

impl Default for SyntheticSurfaceSpec {
    fn default() -> Self {
        SyntheticSurfaceSpec {
            name: "synthetic".into(),
            width: 0.6,
            height: 0.4,
            point_spacing: 0.01,
            base_reflectivity: 100.0,
            h_rms: 0.0,
            diffuse_floor: 1.0,
            noise_std: 0.1,
            standoff: 1.1176,
            wavelength: 905e-9,
            seed: 0,
        }
    }
}

impl SyntheticSurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("point_spacing", self.point_spacing),
            ("standoff", self.standoff),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be positive")));
            }
        }
        let nonneg = [
            ("base_reflectivity", self.base_reflectivity),
            ("h_rms", self.h_rms),
            ("diffuse_floor", self.diffuse_floor),
            ("noise_std", self.noise_std),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Half-width of the mirror-reflection lobe seen by a monostatic sensor,
/// radians. Roughly the beam divergence of the emulated unit.
const SPECULAR_LOBE_RAD: f64 = 0.01;
/// Fraction of the incident power a fully rough surface returns diffusely.
const DIFFUSE_ALBEDO: f64 = 0.25;

/// Generate a regular-grid scan of a vertical plane facing the sensor.
///
/// Heights are perturbed along the surface normal with std `h_rms`. The
/// coherent (mirror) fraction of the return is `rho_s` but reaches the
/// receiver only near normal incidence, through a narrow Gaussian lobe;
/// the scattered remainder `1 - rho_s` returns diffusely at every angle:
///
/// `intensity = floor + base * [rho_s * lobe(theta) + (1 - rho_s) * albedo * cos(theta)] + noise`
///
/// so smooth surfaces show one sharp peak over a dark field while rough
/// surfaces glow evenly. The grid point nearest boresight keeps the
/// unattenuated base reflectivity, preserving one dominant return. The
/// canonical class comes from the generated cloud's own whole-surface
/// specularity against the 10 dB threshold.
pub fn generate_scan(spec: &SyntheticSurfaceSpec) -> Result<SurfaceScan> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_u = (spec.width / spec.point_spacing).round().max(1.0) as usize;
    let n_v = (spec.height / spec.point_spacing).round().max(1.0) as usize;

    // Grid point closest to (y, z) = (0, 0).
    let boresight = {
        let iu = ((n_u as f64 - 1.0) / 2.0).round() as usize;
        let iv = ((n_v as f64 - 1.0) / 2.0).round() as usize;
        (iu, iv)
    };

    let mut points = Vec::with_capacity(n_u * n_v);
    for iu in 0..n_u {
        for iv in 0..n_v {
            let y = (iu as f64 - (n_u as f64 - 1.0) / 2.0) * spec.point_spacing;
            let z = (iv as f64 - (n_v as f64 - 1.0) / 2.0) * spec.point_spacing;
            let height = if spec.h_rms > 0.0 {
                gaussian(&mut rng) * spec.h_rms
            } else {
                0.0
            };
            let x = spec.standoff + height;
            // Incidence angle between the return ray and the surface normal
            // (the -x axis toward the sensor).
            let range = (x * x + y * y + z * z).sqrt();
            let cos_theta = (x / range).clamp(-1.0, 1.0);
            let theta = cos_theta.acos().min(std::f64::consts::FRAC_PI_2 * 0.999_999);
            let wave = WaveSpec {
                wavelength: spec.wavelength,
                incidence_angle: theta,
            };
            let rho = scattering_factor(RoughnessSpec { h_rms: spec.h_rms }, wave)?;
            let specular = if (iu, iv) == boresight {
                spec.base_reflectivity
            } else {
                let lobe = (-(theta / SPECULAR_LOBE_RAD).powi(2)).exp();
                spec.base_reflectivity
                    * (rho * lobe + (1.0 - rho) * DIFFUSE_ALBEDO * cos_theta)
            };
            let noise = if spec.noise_std > 0.0 {
                gaussian(&mut rng) * spec.noise_std
            } else {
                0.0
            };
            let intensity = (specular + spec.diffuse_floor + noise).max(0.0);
            points.push(LidarPoint {
                x,
                y,
                z,
                intensity_raw: intensity,
                intensity_linear: intensity,
                ring: Some((iv % 8) as u8),
            });
        }
    }

    let mut scan = SurfaceScan {
        material_name: spec.name.clone(),
        canonical_class: None,
        points,
    };
    let spec_db = surface_specularity(&scan)?;
    scan.canonical_class = Some(assign_class(spec_db, DEFAULT_SPECULARITY_THRESHOLD_DB));
    Ok(scan)
}

//! Patch-level classification of indoor surfaces into semi-specular and
//! low-specular classes from LiDAR point clouds.
//!
//! The pipeline: load per-surface CSV clouds ([`cloud_io`]), fit the dominant
//! plane and bin points into 3 cm patches ([`patching`]), compute intensity
//! and geometry features ([`features`]), train tree ensembles or a small
//! neural network ([`learners`]), and evaluate with a leave-surface-out
//! protocol ([`evaluation`]). The [`synth`] module generates physically
//! grounded synthetic scans for oracle testing, and [`refdata`] produces a
//! deterministic reference dataset with the published per-material point
//! counts.

pub mod cloud_io;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod patching;
pub mod refdata;
pub mod synth;

pub use error::{Error, Result};

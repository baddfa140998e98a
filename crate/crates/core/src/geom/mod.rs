//! Projective geometry for calibrated static cameras observing a ground plane.
//!
//! Cameras are plain 3×4 projection matrices. Every projection matrix is
//! rescaled on construction so that the left 3×3 block has a unit-norm third
//! row and positive determinant; all operations are therefore invariant to the
//! arbitrary projective scale a calibration tool happens to emit.

mod camera;
mod plane;
mod triangulate;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::CameraModel;
pub use plane::{fit_plane_ransac, PlaneFit, PlaneModel, RansacParams};
pub use triangulate::{
    backproject_to_plane, plane_constrained_system, reprojection_error,
    triangulate_plane_constrained, weighted_system, Triangulation, PLANE_ROW_WEIGHT, WELL_CONDITIONED_RATIO,
};

/// Errors raised by the geometric primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point projects to infinity (|w| = {w:e})")]
    PointAtInfinity { w: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("ill-conditioned triangulation (homogeneous scale {scale:e})")]
    IllConditioned { scale: f64 },
    #[error("plane coefficients are zero or not finite")]
    InvalidPlane,
    #[error("viewing ray is parallel to the plane")]
    RayParallelToPlane,
    #[error("invalid camera {id}: {reason}")]
    InvalidCamera { id: String, reason: String },
    #[error("at least one observation is required")]
    NoObservations,
}

/// A continuous image coordinate in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A metric world coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

impl From<Vector3<f64>> for WorldPoint {
    fn from(v: Vector3<f64>) -> Self {
        Self::from_vector(&v)
    }
}

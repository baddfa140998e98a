//! Cart localization from manual or tag pixel labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuse::{subsample_ratio, FuseError, Provenance, Sample, Trajectory3D};
use crate::geom::{backproject_to_plane, CameraModel, GeomError, PixelPoint, PlaneModel};
use crate::sync::TimeAlignment;

/// Id of the localized cart trajectory.
pub const CART_ID: &str = "cart";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Hand-clicked ground contact point.
    Manual,
    /// Detected tag center, mounted above the ground contact point.
    Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartLabel {
    pub camera_id: String,
    /// Local frame of `camera_id`.
    pub frame: i64,
    pub pixel: PixelPoint,
    pub source: LabelSource,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CartError {
    #[error("cart localization needs at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("cart label for unknown or unaligned camera {0}")]
    UnknownCamera(String),
    #[error("cart label in camera {camera} at frame {frame} lies outside the image")]
    OutOfImage { camera: String, frame: i64 },
    #[error("invalid tag height {0}")]
    InvalidTagHeight(f64),
    #[error("cart label at frame {frame}: {source}")]
    Geom { frame: i64, source: GeomError },
    #[error(transparent)]
    Fuse(#[from] FuseError),
}

impl CartError {
    pub fn code(&self) -> &'static str {
        match self {
            CartError::TooFewLabels(_) => "TooFewLabels",
            CartError::UnknownCamera(_) => "UnknownCamera",
            CartError::OutOfImage { .. } => "OutOfImage",
            CartError::InvalidTagHeight(_) => "InvalidTagHeight",
            CartError::Geom { source, .. } => match source {
                GeomError::RayParallelToPlane => "RayParallelToPlane",
                _ => "Geometry",
            },
            CartError::Fuse(e) => e.code(),
        }
    }
}

/// Backprojects every label to the ground, averages labels that share a
/// global frame, and linearly interpolates onto the output-rate grid between
/// the first and last labeled frame. Tag labels are intersected with the
/// plane raised by `tag_height_m`; manual labels with the plane itself.
pub fn localize_cart(
    labels: &[CartLabel],
    cameras: &BTreeMap<String, CameraModel>,
    plane: &PlaneModel,
    alignment: &TimeAlignment,
    tag_height_m: f64,
    output_fps: f64,
) -> Result<Trajectory3D, CartError> {
    if labels.len() < 2 {
        return Err(CartError::TooFewLabels(labels.len()));
    }
    if !(tag_height_m.is_finite() && tag_height_m >= 0.0) {
        return Err(CartError::InvalidTagHeight(tag_height_m));
    }
    let step = subsample_ratio(alignment.fps, output_fps)? as i64;

    let mut sorted: Vec<&CartLabel> = labels.iter().collect();
    sorted.sort_by(|a, b| {
        (a.frame, &a.camera_id, a.source, a.pixel.x, a.pixel.y)
            .partial_cmp(&(b.frame, &b.camera_id, b.source, b.pixel.x, b.pixel.y))
            .expect("pixels are finite")
    });

    let mut per_frame: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for l in sorted {
        let cam = cameras
            .get(&l.camera_id)
            .ok_or_else(|| CartError::UnknownCamera(l.camera_id.clone()))?;
        let global = alignment
            .to_global(&l.camera_id, l.frame)
            .ok_or_else(|| CartError::UnknownCamera(l.camera_id.clone()))?;
        if !l.pixel.is_finite() || !cam.contains(l.pixel, 0.1) {
            return Err(CartError::OutOfImage {
                camera: l.camera_id.clone(),
                frame: l.frame,
            });
        }
        let h = match l.source {
            LabelSource::Manual => 0.0,
            LabelSource::Tag => tag_height_m,
        };
        let p = backproject_to_plane(cam, l.pixel, plane, h).map_err(|source| CartError::Geom { frame: global, source })?;
        let g = plane.to_ground_frame(&p);
        per_frame.entry(global).or_default().push((g.x, g.y));
    }

    let keyframes: Vec<Sample> = per_frame
        .into_iter()
        .map(|(f, pts)| {
            let n = pts.len() as f64;
            Sample::new(
                f,
                pts.iter().map(|p| p.0).sum::<f64>() / n,
                pts.iter().map(|p| p.1).sum::<f64>() / n,
            )
        })
        .collect();

    let first = keyframes[0].frame;
    let last = keyframes[keyframes.len() - 1].frame;
    let mut samples = Vec::new();
    let mut k = 0;
    let mut f = first;
    while f <= last {
        while keyframes[k + 1..].first().is_some_and(|s| s.frame <= f) {
            k += 1;
        }
        let a = keyframes[k];
        let s = match keyframes.get(k + 1) {
            Some(b) if a.frame != f => {
                let t = (f - a.frame) as f64 / (b.frame - a.frame) as f64;
                Sample::new(f, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            }
            _ => Sample::new(f, a.x, a.y),
        };
        samples.push(s);
        f += step;
    }
    Ok(Trajectory3D::with_provenance(CART_ID, samples, Provenance::Cart)?)
}

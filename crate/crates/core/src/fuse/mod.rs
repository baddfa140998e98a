//! Turning per-camera image tracks into metric ground trajectories.
//!
//! The flow is: [`associate`] tracks across cameras, [`fuse_group`] each
//! matched group into a [`Trajectory3D`], then [`interpolate_gaps`],
//! optionally [`smooth`], [`flag_anomalies`] and [`downsample`]. Human edits
//! arrive afterwards as [`Correction`]s through [`apply_corrections`].

mod anomaly;
mod assignment;
mod associate;
mod corrections;
mod group;
mod postprocess;
mod trajectory;

use thiserror::Error;

use crate::geom::GeomError;

pub use anomaly::{flag_anomalies, AnomalyParams};
pub use assignment::min_cost_assignment;
pub use associate::{
    associate, AssociationConflict, AssociationParams, Association, GlobalTrack, PairScore, TrackKey,
};
pub use corrections::{apply_correction, apply_corrections, Correction, CorrectionFailure, CorrectionOp};
pub use group::{fuse_group, FusionContext};
pub use postprocess::{downsample, interpolate_gaps, smooth, subsample_ratio};
pub use trajectory::{
    Anomaly, AnomalyKind, Provenance, Sample, Segment, Trajectory3D, HARD_SPEED_CAP_MPS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuseError {
    #[error("cannot fuse an empty group")]
    EmptyGroup,
    #[error("native rate {native} Hz is not an integer multiple of output rate {output} Hz")]
    NonIntegerRatio { native: f64, output: f64 },
    #[error("smoothing window must be odd and positive, got {0}")]
    EvenWindow(usize),
    #[error("trajectories {a} and {b} overlap at frame {frame}")]
    OverlappingMerge { a: String, b: String, frame: i64 },
    #[error("unknown trajectory id {0}")]
    UnknownId(String),
    #[error("trajectory id {0} already exists")]
    IdConflict(String),
    #[error("frame {frame} out of range for trajectory {id}")]
    FrameOutOfRange { id: String, frame: i64 },
    #[error("invalid trajectory {id}: {reason}")]
    InvalidTrajectory { id: String, reason: String },
    #[error("trajectory {id} moves {speed:.1} m/s into frame {frame}, above the hard cap")]
    SpeedCap { id: String, frame: i64, speed: f64 },
    #[error("camera {0} has no calibration or time alignment")]
    UnknownCamera(String),
    #[error("geometry error at frame {frame}: {source}")]
    Geom { frame: i64, source: GeomError },
}

impl FuseError {
    /// Stable machine-readable code, used by the CLI and the review service.
    pub fn code(&self) -> &'static str {
        match self {
            FuseError::EmptyGroup => "EmptyGroup",
            FuseError::NonIntegerRatio { .. } => "NonIntegerRatio",
            FuseError::EvenWindow(_) => "EvenWindow",
            FuseError::OverlappingMerge { .. } => "OverlappingMerge",
            FuseError::UnknownId(_) => "UnknownId",
            FuseError::IdConflict(_) => "IdConflict",
            FuseError::FrameOutOfRange { .. } => "FrameOutOfRange",
            FuseError::InvalidTrajectory { .. } => "InvalidTrajectory",
            FuseError::SpeedCap { .. } => "SpeedCap",
            FuseError::UnknownCamera(_) => "UnknownCamera",
            FuseError::Geom { .. } => "Geometry",
        }
    }
}

//! Semi-automatic labeling of pedestrian trajectories from static cameras.
//!
//! Per-camera image tracks are synchronized, associated across cameras and
//! triangulated under a ground-plane constraint into metric trajectories on
//! `z = 0`, which humans then verify and correct.
//!
//! ```
//! use trajlab::fixtures::down_camera;
//! use trajlab::geom::{backproject_to_plane, PlaneModel, WorldPoint};
//!
//! let cam = down_camera();
//! let px = cam.project(&WorldPoint::new(2.0, 3.0, 0.0)).unwrap();
//! let back = backproject_to_plane(&cam, px, &PlaneModel::horizontal(0.0), 0.0).unwrap();
//! assert!(back.distance(&WorldPoint::new(2.0, 3.0, 0.0)) < 1e-9);
//! ```

pub mod cart;
pub mod fixtures;
pub mod fuse;
pub mod geom;
pub mod ingest;
pub mod pipeline;
pub mod stats;
pub mod sync;
pub mod synth;

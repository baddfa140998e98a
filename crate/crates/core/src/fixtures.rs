//! Reference cameras shared by unit tests, integration tests and fuzz seeds.

use crate::geom::{CameraModel, WorldPoint};

/// Center of [`oblique_camera`].
pub const OBLIQUE_CENTER: WorldPoint = WorldPoint::new(-9.0, -7.0, 9.0);
/// Center of [`oblique_camera_b`].
pub const OBLIQUE_B_CENTER: WorldPoint = WorldPoint::new(13.0, -6.0, 8.5);
const LOOK_TARGET: WorldPoint = WorldPoint::new(2.0, 1.0, 0.0);

/// `P = [[1,0,0,0],[0,1,0,0],[0,0,-1,10]]`: a unit-focal camera 10 m above the
/// origin looking straight down.
pub fn down_camera() -> CameraModel {
    CameraModel::from_row_major(
        "down",
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 10.0],
        10,
        10,
    )
    .expect("fixture camera is valid")
}

/// A 1920×1080 camera mounted 9 m high, looking down at the scene at an angle.
pub fn oblique_camera() -> CameraModel {
    CameraModel::look_at("oblique", OBLIQUE_CENTER, LOOK_TARGET, 1200.0, 1920, 1080)
        .expect("fixture camera is valid")
}

/// A second oblique camera roughly 110° around the scene from [`oblique_camera`].
pub fn oblique_camera_b() -> CameraModel {
    CameraModel::look_at("oblique_b", OBLIQUE_B_CENTER, LOOK_TARGET, 1200.0, 1920, 1080)
        .expect("fixture camera is valid")
}

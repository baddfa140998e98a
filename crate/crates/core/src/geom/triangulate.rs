use nalgebra::{SMatrix, Vector4};

use super::{CameraModel, GeomError, PixelPoint, PlaneModel, WorldPoint};

/// Triangulations whose `σ_min / σ_next` ratio reaches this value are
/// reported as degenerate.
pub const WELL_CONDITIONED_RATIO: f64 = 0.5;

/// Weight of the plane row in the solved system, in pixels per meter of
/// distance from the plane. Large enough that the solution lies on the plane
/// to well below a micrometer.
pub const PLANE_ROW_WEIGHT: f64 = 1e6;

/// Homogeneous scale at or below which dehomogenization is refused.
const DEHOMOGENIZE_EPS: f64 = 1e-9;

/// Result of a plane-constrained two-view triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    pub point: WorldPoint,
    /// Singular values of the solved system, descending.
    pub singular_values: [f64; 4],
    /// `σ_4 / σ_3`; zero for exact data.
    pub condition_ratio: f64,
    pub well_conditioned: bool,
    /// Both observations came from the same camera; the estimate is then a
    /// ray/plane intersection, not a two-view one.
    pub same_camera: bool,
    /// Depths the camera rows were divided by in the solved system.
    pub depths: [f64; 2],
}

/// The 5×4 system stacking the cross-product rows of both observations and
/// the plane coefficients.
pub fn plane_constrained_system(
    cam_i: &CameraModel,
    obs_i: PixelPoint,
    cam_j: &CameraModel,
    obs_j: PixelPoint,
    plane: &PlaneModel,
) -> SMatrix<f64, 5, 4> {
    let [a0, a1] = cam_i.dlt_rows(obs_i);
    let [b0, b1] = cam_j.dlt_rows(obs_j);
    let g = plane.coeffs();
    let mut a = SMatrix::<f64, 5, 4>::zeros();
    a.set_row(0, &a0);
    a.set_row(1, &a1);
    a.set_row(2, &b0);
    a.set_row(3, &b1);
    for (c, v) in g.iter().enumerate() {
        a[(4, c)] = *v;
    }
    a
}

/// [`plane_constrained_system`] with each camera's rows divided by its depth
/// and the plane row scaled by [`PLANE_ROW_WEIGHT`]. With the true depths the
/// camera rows measure pixel residuals.
pub fn weighted_system(
    cam_i: &CameraModel,
    obs_i: PixelPoint,
    cam_j: &CameraModel,
    obs_j: PixelPoint,
    plane: &PlaneModel,
    depths: [f64; 2],
) -> SMatrix<f64, 5, 4> {
    let mut a = plane_constrained_system(cam_i, obs_i, cam_j, obs_j, plane);
    let scale = [1.0 / depths[0], 1.0 / depths[0], 1.0 / depths[1], 1.0 / depths[1], PLANE_ROW_WEIGHT];
    for (r, s) in scale.iter().enumerate() {
        for c in 0..4 {
            a[(r, c)] *= s;
        }
    }
    a
}

/// Solves the plane-constrained two-view system in the least-squares sense:
/// the homogeneous solution is the right singular vector of the smallest
/// singular value. A first solve with unit depths gives the depths for a
/// second, which then minimizes the reprojection error to first order.
pub fn triangulate_plane_constrained(
    cam_i: &CameraModel,
    obs_i: PixelPoint,
    cam_j: &CameraModel,
    obs_j: PixelPoint,
    plane: &PlaneModel,
) -> Result<Triangulation, GeomError> {
    if plane.coeffs().iter().all(|&c| c == 0.0) {
        return Err(GeomError::InvalidPlane);
    }
    let first = solve(cam_i, obs_i, cam_j, obs_j, plane, [1.0, 1.0])?;
    let depth = |cam: &CameraModel| {
        let d = cam.project_homogeneous(&first.point).z;
        if d.is_finite() && d > 0.0 {
            d
        } else {
            1.0
        }
    };
    solve(cam_i, obs_i, cam_j, obs_j, plane, [depth(cam_i), depth(cam_j)])
}

fn solve(
    cam_i: &CameraModel,
    obs_i: PixelPoint,
    cam_j: &CameraModel,
    obs_j: PixelPoint,
    plane: &PlaneModel,
    depths: [f64; 2],
) -> Result<Triangulation, GeomError> {
    let a = weighted_system(cam_i, obs_i, cam_j, obs_j, plane, depths);
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| GeomError::DegenerateGeometry("SVD failed".into()))?;
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let singular_values = order.map(|i| sv[i]);
    let xh: Vector4<f64> = v_t.row(order[3]).transpose();
    let w = xh[3];
    if w.abs() <= DEHOMOGENIZE_EPS || !w.is_finite() {
        return Err(GeomError::IllConditioned { scale: w });
    }
    let condition_ratio = if singular_values[2] > 0.0 {
        singular_values[3] / singular_values[2]
    } else {
        1.0
    };
    Ok(Triangulation {
        point: WorldPoint::new(xh[0] / w, xh[1] / w, xh[2] / w),
        singular_values,
        condition_ratio,
        well_conditioned: condition_ratio < WELL_CONDITIONED_RATIO,
        same_camera: cam_i.id() == cam_j.id(),
        depths,
    })
}

/// Intersects the viewing ray through `obs` with the plane raised by
/// `height_offset_m` along its normal, then drops the hit point back onto the
/// plane. Used for single-view estimates and for markers mounted at a known
/// height.
pub fn backproject_to_plane(
    cam: &CameraModel,
    obs: PixelPoint,
    plane: &PlaneModel,
    height_offset_m: f64,
) -> Result<WorldPoint, GeomError> {
    let n = plane.normal();
    let dir = cam.ray_direction(obs);
    let denom = n.dot(&dir.normalize());
    if denom.abs() <= 1e-9 || !denom.is_finite() {
        return Err(GeomError::RayParallelToPlane);
    }
    let c = cam.center().to_vector();
    let g_d = plane.coeffs()[3];
    let t = (height_offset_m - g_d - n.dot(&c)) / n.dot(&dir);
    let hit = c + dir * t;
    Ok(WorldPoint::from_vector(&(hit - n * height_offset_m)))
}

/// Mean pixel distance between each observation and the projection of `x`.
pub fn reprojection_error(
    observations: &[(&CameraModel, PixelPoint)],
    x: &WorldPoint,
) -> Result<f64, GeomError> {
    if observations.is_empty() {
        return Err(GeomError::NoObservations);
    }
    let mut total = 0.0;
    for (cam, obs) in observations {
        total += cam.project(x)?.distance(obs);
    }
    Ok(total / observations.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn noiseless_pair_recovers_point() {
        let (a, b) = (fixtures::down_camera(), fixtures::oblique_camera());
        let x = WorldPoint::new(2.0, 3.0, 0.0);
        let t = triangulate_plane_constrained(
            &a,
            a.project(&x).unwrap(),
            &b,
            b.project(&x).unwrap(),
            &PlaneModel::horizontal(0.0),
        )
        .unwrap();
        assert!(t.point.distance(&x) < 1e-9, "{:?}", t.point);
        assert!(t.well_conditioned && !t.same_camera);
    }

    #[test]
    fn same_camera_reduces_to_ray_plane_intersection() {
        let cam = fixtures::oblique_camera();
        let plane = PlaneModel::horizontal(0.0);
        let x = WorldPoint::new(1.0, -2.0, 0.0);
        let obs = cam.project(&x).unwrap();
        let t = triangulate_plane_constrained(&cam, obs, &cam, obs, &plane).unwrap();
        assert!(t.same_camera);
        assert!(t.point.distance(&x) < 1e-9);
        let b = backproject_to_plane(&cam, obs, &plane, 0.0).unwrap();
        assert!(b.distance(&t.point) < 1e-9);
    }

    #[test]
    fn down_camera_backprojection() {
        let cam = fixtures::down_camera();
        let plane = PlaneModel::horizontal(0.0);
        let g = backproject_to_plane(&cam, PixelPoint::new(0.2, 0.3), &plane, 0.0).unwrap();
        assert!(g.distance(&WorldPoint::new(2.0, 3.0, 0.0)) < 1e-12);

        let tag = cam.project(&WorldPoint::new(2.0, 3.0, 1.5)).unwrap();
        let g = backproject_to_plane(&cam, tag, &plane, 1.5).unwrap();
        assert!(g.distance(&WorldPoint::new(2.0, 3.0, 0.0)) < 1e-12);
    }

    #[test]
    fn ray_parallel_to_plane() {
        // Horizontal optical axis through the principal point.
        let cam = CameraModel::look_at(
            "h",
            WorldPoint::new(0.0, 0.0, 1.0),
            WorldPoint::new(10.0, 0.0, 1.0),
            1000.0,
            1000,
            800,
        )
        .unwrap();
        let err = backproject_to_plane(&cam, PixelPoint::new(500.0, 400.0), &PlaneModel::horizontal(0.0), 0.0)
            .unwrap_err();
        assert_eq!(err, GeomError::RayParallelToPlane);
    }

    #[test]
    fn reprojection_error_cases() {
        let (a, b) = (fixtures::oblique_camera(), fixtures::oblique_camera_b());
        let x = WorldPoint::new(0.5, 0.5, 0.0);
        let pa = a.project(&x).unwrap();
        let pb = b.project(&x).unwrap();
        assert_eq!(reprojection_error(&[(&a, pa), (&b, pb)], &x).unwrap(), 0.0);
        let shifted = PixelPoint::new(pa.x + 2.0, pa.y);
        let e = reprojection_error(&[(&a, shifted), (&b, pb)], &x).unwrap();
        assert!((e - 1.0).abs() < 1e-9);
        assert_eq!(reprojection_error(&[], &x), Err(GeomError::NoObservations));
    }
}

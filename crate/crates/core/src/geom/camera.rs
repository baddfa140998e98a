use nalgebra::{Matrix3, Matrix3x4, RowVector4, Vector3, Vector4};

use super::{GeomError, PixelPoint, WorldPoint};

/// |w| at or below this is treated as a point on the principal plane.
const PROJECTION_EPS: f64 = 1e-12;

/// A calibrated, distortion-free camera described by its 3×4 projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    id: String,
    p: Matrix3x4<f64>,
    width: u32,
    height: u32,
    m_inv: Matrix3<f64>,
    center: Vector3<f64>,
}

impl CameraModel {
    /// Validates and normalizes `p`.
    ///
    /// The matrix must have rank 3 and a nonsingular left 3×3 block (finite
    /// camera). It is rescaled so the third row of the left block has unit
    /// norm and the block has positive determinant.
    pub fn new(
        id: impl Into<String>,
        p: Matrix3x4<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self, GeomError> {
        let id = id.into();
        let invalid = |reason: &str| GeomError::InvalidCamera {
            id: id.clone(),
            reason: reason.to_string(),
        };
        if p.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let sv = p.svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smax == 0.0 || smin <= 1e-12 * smax {
            return Err(invalid("projection matrix does not have rank 3"));
        }
        let m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into_owned();
        let det = m.determinant();
        let scale = m.norm();
        if det.abs() <= 1e-12 * scale * scale * scale {
            return Err(invalid("left 3x3 block is singular (camera at infinity)"));
        }
        let row3 = m.row(2).norm();
        // An already normalized matrix is kept bit for bit, so that writing
        // and reloading a camera is exact.
        let s = if (row3 - 1.0).abs() <= 4.0 * f64::EPSILON {
            det.signum()
        } else {
            det.signum() / row3
        };
        let p = p * s;
        let m = m * s;
        let m_inv = m
            .try_inverse()
            .ok_or_else(|| invalid("left 3x3 block is not invertible"))?;
        let center = -(m_inv * p.column(3));
        Ok(Self {
            id,
            p,
            width,
            height,
            m_inv,
            center,
        })
    }

    /// Builds a camera from twelve row-major matrix entries.
    pub fn from_row_major(
        id: impl Into<String>,
        entries: &[f64; 12],
        width: u32,
        height: u32,
    ) -> Result<Self, GeomError> {
        Self::new(id, Matrix3x4::from_row_slice(entries), width, height)
    }

    /// Pinhole camera at `center` looking at `target` with z up in the world.
    pub fn look_at(
        id: impl Into<String>,
        center: WorldPoint,
        target: WorldPoint,
        focal_px: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeomError> {
        let c = center.to_vector();
        let forward = (target.to_vector() - c).normalize();
        let right = forward.cross(&Vector3::z());
        if right.norm() < 1e-9 {
            return Err(GeomError::DegenerateGeometry(
                "look_at direction is parallel to the world z axis".into(),
            ));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let k = Matrix3::new(
            focal_px,
            0.0,
            f64::from(width) / 2.0,
            0.0,
            focal_px,
            f64::from(height) / 2.0,
            0.0,
            0.0,
            1.0,
        );
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        rt.set_column(3, &(-(r * c)));
        Self::new(id, k * rt, width, height)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// The normalized projection matrix.
    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.p
    }

    /// Row-major entries of the normalized projection matrix.
    pub fn row_major(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for r in 0..3 {
            for c in 0..4 {
                out[r * 4 + c] = self.p[(r, c)];
            }
        }
        out
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn center(&self) -> WorldPoint {
        WorldPoint::from_vector(&self.center)
    }

    /// Direction of the viewing ray through `obs` (not normalized, sign arbitrary).
    pub fn ray_direction(&self, obs: PixelPoint) -> Vector3<f64> {
        self.m_inv * Vector3::new(obs.x, obs.y, 1.0)
    }

    /// Homogeneous image coordinates `P·(x, y, z, 1)`.
    pub fn project_homogeneous(&self, x: &WorldPoint) -> Vector3<f64> {
        self.p * Vector4::new(x.x, x.y, x.z, 1.0)
    }

    pub fn project(&self, x: &WorldPoint) -> Result<PixelPoint, GeomError> {
        let h = self.project_homogeneous(x);
        if h.z.abs() <= PROJECTION_EPS {
            return Err(GeomError::PointAtInfinity { w: h.z });
        }
        Ok(PixelPoint::new(h.x / h.z, h.y / h.z))
    }

    /// The two cross-product constraint rows `y·p3 − p2` and `p1 − x·p3`.
    ///
    /// Both rows annihilate the homogeneous coordinates of every world point
    /// that projects onto `obs`.
    pub fn dlt_rows(&self, obs: PixelPoint) -> [RowVector4<f64>; 2] {
        let p1 = self.p.row(0);
        let p2 = self.p.row(1);
        let p3 = self.p.row(2);
        [p3 * obs.y - p2, p1 - p3 * obs.x]
    }

    /// Whether `px` lies within the image, allowing `margin` as a fraction of
    /// the image size on every side.
    pub fn contains(&self, px: PixelPoint, margin: f64) -> bool {
        let w = f64::from(self.width);
        let h = f64::from(self.height);
        px.x >= -margin * w && px.x <= w * (1.0 + margin) && px.y >= -margin * h && px.y <= h * (1.0 + margin)
    }
}

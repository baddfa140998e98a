use nalgebra::{DMatrix, Isometry3, Matrix4, Rotation3, Translation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeomError, WorldPoint};

/// Smallest admissible |g_c| after normalization.
const MIN_VERTICAL_COMPONENT: f64 = 0.1;

/// Ground plane `g_a·x + g_b·y + g_c·z + g_d = 0` together with the rigid map
/// that carries it onto `z = 0`.
///
/// Coefficients are normalized so the normal has unit length and `g_c > 0`.
/// The map uses the minimal rotation taking the normal to `+z`, followed by a
/// translation along `z` only.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneModel {
    coeffs: [f64; 4],
    to_ground: Isometry3<f64>,
}

impl PlaneModel {
    pub fn new(coeffs: [f64; 4]) -> Result<Self, GeomError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::InvalidPlane);
        }
        let n = Vector3::new(coeffs[0], coeffs[1], coeffs[2]);
        let norm = n.norm();
        if norm == 0.0 {
            return Err(GeomError::InvalidPlane);
        }
        let mut s = 1.0 / norm;
        if coeffs[2] < 0.0 {
            s = -s;
        }
        let mut c = coeffs.map(|v| v * s);
        // Keep a canonical zero so serialized planes never carry "-0".
        for v in &mut c {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        if c[2] < MIN_VERTICAL_COMPONENT {
            return Err(GeomError::DegenerateGeometry(format!(
                "plane normal too close to horizontal (g_c = {:.4})",
                c[2]
            )));
        }
        let normal = Vector3::new(c[0], c[1], c[2]);
        let rotation = Rotation3::rotation_between(&normal, &Vector3::z())
            .unwrap_or_else(Rotation3::identity);
        let to_ground = Isometry3::from_parts(
            Translation3::new(0.0, 0.0, c[3]),
            UnitQuaternion::from_rotation_matrix(&rotation),
        );
        Ok(Self {
            coeffs: c,
            to_ground,
        })
    }

    /// The horizontal plane `z = height`.
    pub fn horizontal(height: f64) -> Self {
        Self::new([0.0, 0.0, 1.0, -height]).expect("horizontal plane is valid")
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(self.coeffs[0], self.coeffs[1], self.coeffs[2])
    }

    pub fn signed_distance(&self, x: &WorldPoint) -> f64 {
        self.normal().dot(&x.to_vector()) + self.coeffs[3]
    }

    /// Orthogonal projection of `x` onto the plane.
    pub fn project_onto(&self, x: &WorldPoint) -> WorldPoint {
        let d = self.signed_distance(x);
        WorldPoint::from_vector(&(x.to_vector() - self.normal() * d))
    }

    /// Applies the rigid map to the ground frame; on-plane points land on `z = 0`.
    pub fn to_ground_frame(&self, x: &WorldPoint) -> WorldPoint {
        WorldPoint::from_vector(&self.to_ground.transform_point(&x.to_vector().into()).coords)
    }

    /// Inverse of [`PlaneModel::to_ground_frame`].
    pub fn from_ground_frame(&self, x: &WorldPoint) -> WorldPoint {
        WorldPoint::from_vector(
            &self
                .to_ground
                .inverse_transform_point(&x.to_vector().into())
                .coords,
        )
    }

    pub fn rigid_to_z0(&self) -> Matrix4<f64> {
        self.to_ground.to_homogeneous()
    }
}

impl Serialize for PlaneModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            coeffs: [f64; 4],
            rigid_to_z0: [[f64; 4]; 4],
        }
        let m = self.rigid_to_z0();
        let mut rows = [[0.0; 4]; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        Repr {
            coeffs: self.coeffs,
            rigid_to_z0: rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PlaneModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // The transform is derived data; only the coefficients are read back.
        #[derive(Deserialize)]
        struct Repr {
            coeffs: [f64; 4],
        }
        let repr = Repr::deserialize(deserializer)?;
        PlaneModel::new(repr.coeffs).map_err(serde::de::Error::custom)
    }
}

/// Parameters of the RANSAC plane search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_tol_m: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_tol_m: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: PlaneModel,
    pub inliers: Vec<bool>,
}

impl PlaneFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Robust ground-plane fit: 3-point RANSAC followed by a total-least-squares
/// refit on the consensus set.
pub fn fit_plane_ransac(points: &[WorldPoint], params: &RansacParams) -> Result<PlaneFit, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegenerateGeometry(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::DegenerateGeometry("non-finite input point".into()));
    }
    let pts: Vec<Vector3<f64>> = points.iter().map(|p| p.to_vector()).collect();
    let extent = pts
        .iter()
        .map(|p| (p - pts[0]).norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(usize, Vector3<f64>, f64)> = None;
    for _ in 0..params.iterations.max(1) {
        let idx = rand::seq::index::sample(&mut rng, pts.len(), 3);
        let (a, b, c) = (pts[idx.index(0)], pts[idx.index(1)], pts[idx.index(2)]);
        let n = (b - a).cross(&(c - a));
        if n.norm() <= 1e-12 * extent * extent {
            continue;
        }
        let mut n = n.normalize();
        if n.z < 0.0 {
            n = -n;
        }
        if n.z < MIN_VERTICAL_COMPONENT {
            continue;
        }
        let d = -n.dot(&a);
        let count = pts
            .iter()
            .filter(|p| (n.dot(p) + d).abs() <= params.inlier_tol_m)
            .count();
        if best.as_ref().is_none_or(|(k, _, _)| count > *k) {
            best = Some((count, n, d));
        }
    }
    let (_, n, d) = best.ok_or_else(|| {
        GeomError::DegenerateGeometry("no non-degenerate sample found (points collinear?)".into())
    })?;

    let inliers: Vec<bool> = pts
        .iter()
        .map(|p| (n.dot(p) + d).abs() <= params.inlier_tol_m)
        .collect();
    let consensus: Vec<Vector3<f64>> = pts
        .iter()
        .zip(&inliers)
        .filter_map(|(p, &keep)| keep.then_some(*p))
        .collect();
    let coeffs = total_least_squares_plane(&consensus)?;
    Ok(PlaneFit {
        plane: PlaneModel::new(coeffs)?,
        inliers,
    })
}

/// Plane through the centroid whose normal is the least significant right
/// singular vector of the centered point matrix.
fn total_least_squares_plane(points: &[Vector3<f64>]) -> Result<[f64; 4], GeomError> {
    if points.len() < 3 {
        return Err(GeomError::DegenerateGeometry(
            "consensus set has fewer than 3 points".into(),
        ));
    }
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let centered = DMatrix::from_fn(points.len(), 3, |r, c| points[r][c] - centroid[c]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| GeomError::DegenerateGeometry("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let (largest, middle, smallest) = (sv[order[0]], sv[order[1]], order[2]);
    if middle <= 1e-9 * largest.max(f64::MIN_POSITIVE) {
        return Err(GeomError::DegenerateGeometry("consensus set is collinear".into()));
    }
    let n = v_t.row(smallest).transpose();
    let n = Vector3::new(n[0], n[1], n[2]);
    Ok([n.x, n.y, n.z, -n.dot(&centroid)])
}

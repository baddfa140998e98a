//! Synthetic sessions with known ground truth.
//!
//! A scene is a ring of static cameras around a rectangular arena on a
//! (possibly tilted) ground plane. Pedestrians walk piecewise-linear paths
//! between random goals; the tracked image point is the foot point raised by a
//! sinusoidal body sway along the plane normal, projected and perturbed by
//! Gaussian pixel noise. Every random draw comes from one seeded stream, so a
//! spec always produces the same scene.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cart::{CartLabel, LabelSource};
use crate::fuse::{Provenance, Sample, Trajectory3D};
use crate::geom::{CameraModel, GeomError, PixelPoint, PlaneModel, WorldPoint};
use crate::ingest::{
    write_calibration, write_cart_labels, write_ground_points, write_luminance, write_trajectories, write_tracks,
    IngestError, SessionManifest, Track2D, TrackObservation, TrajectoryFile,
};
use crate::sync::LuminanceSeries;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigSpec {
    pub count: usize,
    pub ring_radius_m: f64,
    /// Mounting height above the ground below the camera.
    pub height_m: f64,
    pub spacing_deg: f64,
    pub start_deg: f64,
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for RigSpec {
    fn default() -> Self {
        Self {
            count: 3,
            ring_radius_m: 16.0,
            height_m: 8.0,
            spacing_deg: 90.0,
            start_deg: 0.0,
            focal_px: 1000.0,
            width: 1920,
            height: 1080,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSpec {
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    /// Rate of spontaneous goal changes (Poisson).
    pub goal_change_rate_hz: f64,
    /// Pedestrians never come closer than this.
    pub min_separation_m: f64,
}

impl Default for WalkSpec {
    fn default() -> Self {
        Self {
            speed_min_mps: 0.8,
            speed_max_mps: 1.6,
            goal_change_rate_hz: 0.1,
            min_separation_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub pixel_sigma: f64,
    pub sway_amplitude_m: f64,
    pub sway_freq_hz: f64,
    pub luminance_sigma: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            pixel_sigma: 1.0,
            sway_amplitude_m: 0.03,
            sway_freq_hz: 1.8,
            luminance_sigma: 0.5,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            pixel_sigma: 0.0,
            sway_amplitude_m: 0.0,
            sway_freq_hz: 1.8,
            luminance_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundSpec {
    /// World height is `slope[0]·x + slope[1]·y + offset_m` on the ground.
    pub slope: [f64; 2],
    pub offset_m: f64,
    pub points: usize,
    /// Side of the square the ground points are drawn from.
    pub extent_m: f64,
    pub point_noise_m: f64,
    pub outlier_fraction: f64,
}

impl Default for GroundSpec {
    fn default() -> Self {
        Self {
            slope: [0.0, 0.0],
            offset_m: 0.0,
            points: 600,
            extent_m: 20.0,
            point_noise_m: 0.005,
            outlier_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartSpec {
    pub tag_height_m: f64,
    pub speed_mps: f64,
    /// Each camera labels every this many of its local frames.
    pub label_every: i64,
    pub source: LabelSource,
}

impl Default for CartSpec {
    fn default() -> Self {
        Self {
            tag_height_m: 1.2,
            speed_mps: 0.8,
            label_every: 12,
            source: LabelSource::Tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub session: String,
    /// Arena size in x and y, centered on the ground origin.
    pub arena_m: [f64; 2],
    pub cameras: RigSpec,
    pub pedestrians: usize,
    pub walk: WalkSpec,
    pub noise: NoiseSpec,
    pub ground: GroundSpec,
    pub fps: f64,
    pub output_fps: f64,
    pub duration_s: f64,
    /// Local frame of the light flash in each camera. Defaults vary per camera.
    pub sync_frames: Option<Vec<i64>>,
    pub cart: Option<CartSpec>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            session: "synth".into(),
            arena_m: [12.0, 12.0],
            cameras: RigSpec::default(),
            pedestrians: 20,
            walk: WalkSpec::default(),
            noise: NoiseSpec::default(),
            ground: GroundSpec::default(),
            fps: 60.0,
            output_fps: 2.5,
            duration_s: 20.0,
            sync_frames: None,
            cart: None,
        }
    }
}

/// The flash is at least this many frames into each camera's recording.
const MIN_SYNC_FRAME: i64 = 10;
const LUMINANCE_OFF: f64 = 40.0;
const LUMINANCE_ON: f64 = 200.0;

impl SceneSpec {
    /// The same scene with image, sway, luminance and ground-point noise
    /// removed. Ground outliers stay; they are rejected exactly.
    pub fn noiseless(mut self) -> Self {
        self.noise = NoiseSpec::none();
        self.ground.point_noise_m = 0.0;
        self
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !pos(self.fps) || !pos(self.output_fps) || self.output_fps > self.fps {
            return bad("fps and output_fps must be positive with output_fps <= fps");
        }
        if !pos(self.duration_s) || (self.duration_s * self.fps).round() < 2.0 {
            return bad("duration must cover at least two frames");
        }
        if !pos(self.arena_m[0]) || !pos(self.arena_m[1]) {
            return bad("arena extent must be positive");
        }
        let r = &self.cameras;
        if r.count == 0 || !pos(r.ring_radius_m) || !pos(r.height_m) || !pos(r.focal_px) || r.width == 0 || r.height == 0
        {
            return bad("camera rig needs at least one camera with positive geometry");
        }
        if !r.spacing_deg.is_finite() || !r.start_deg.is_finite() {
            return bad("camera angles must be finite");
        }
        let w = &self.walk;
        if !pos(w.speed_min_mps) || !(w.speed_max_mps >= w.speed_min_mps) || !w.speed_max_mps.is_finite() {
            return bad("walking speeds must satisfy 0 < min <= max");
        }
        if !nonneg(w.goal_change_rate_hz) || !nonneg(w.min_separation_m) {
            return bad("goal change rate and separation must be non-negative");
        }
        let n = &self.noise;
        if !nonneg(n.pixel_sigma) || !nonneg(n.sway_amplitude_m) || !nonneg(n.sway_freq_hz) || !nonneg(n.luminance_sigma)
        {
            return bad("noise parameters must be non-negative");
        }
        let g = &self.ground;
        if !g.slope.iter().all(|s| s.is_finite()) || !g.offset_m.is_finite() || !pos(g.extent_m) {
            return bad("ground plane parameters must be finite");
        }
        if !nonneg(g.point_noise_m) || !(0.0..0.5).contains(&g.outlier_fraction) {
            return bad("ground noise must be non-negative and outlier fraction below 0.5");
        }
        if let Some(s) = &self.sync_frames {
            if s.len() != r.count {
                return bad("sync_frames needs one entry per camera");
            }
            if s.iter().any(|f| *f < MIN_SYNC_FRAME) {
                return bad("sync frames must leave room before the flash");
            }
        }
        if let Some(c) = &self.cart {
            if !nonneg(c.tag_height_m) || !pos(c.speed_mps) || c.label_every < 1 {
                return bad("cart needs a non-negative tag height, positive speed and label interval");
            }
        }
        Ok(())
    }

    fn sync_frames(&self) -> Vec<i64> {
        match &self.sync_frames {
            Some(s) => s.clone(),
            None => (0..self.cameras.count as i64).map(|c| 40 + (23 * c) % 50).collect(),
        }
    }

    pub fn frame_count(&self) -> i64 {
        (self.duration_s * self.fps).round() as i64
    }
}

/// Generator bookkeeping for one emitted observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationRecord {
    pub global_frame: i64,
    pub pedestrian: usize,
    /// The 3D point that was projected (foot point plus sway).
    pub world: WorldPoint,
    /// Added pixel noise; `observation − noise` is the exact projection.
    pub noise: PixelPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackOwner {
    pub camera: String,
    pub track_id: u64,
    pub pedestrian: String,
}

/// Summary facts about a generated scene, written as `ledger.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub seed: u64,
    pub session: String,
    pub fps: f64,
    pub frames: i64,
    pub pedestrians: usize,
    pub plane: [f64; 4],
    pub reference_camera: String,
    pub sync_frames: BTreeMap<String, i64>,
    pub offsets: BTreeMap<String, i64>,
    pub track_owners: Vec<TrackOwner>,
    pub ground_inliers: usize,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub cameras: Vec<CameraModel>,
    pub plane: PlaneModel,
    /// Ground-frame truth `p1..pN` on the global timeline.
    pub truth: Vec<Trajectory3D>,
    pub tracks: BTreeMap<String, Vec<Track2D>>,
    /// Per camera, per track id, one record per observation in order.
    pub records: BTreeMap<(String, u64), Vec<ObservationRecord>>,
    pub luminance: BTreeMap<String, LuminanceSeries>,
    pub ground_points: Vec<WorldPoint>,
    pub ground_inlier: Vec<bool>,
    pub cart_labels: Vec<CartLabel>,
    pub cart_truth: Option<Trajectory3D>,
    pub ledger: Ledger,
}

impl Scene {
    pub fn camera_map(&self) -> BTreeMap<String, CameraModel> {
        self.cameras.iter().map(|c| (c.id().to_string(), c.clone())).collect()
    }

    /// Owner pedestrian id of a track.
    pub fn owner(&self, camera: &str, track_id: u64) -> Option<&str> {
        self.ledger
            .track_owners
            .iter()
            .find(|o| o.camera == camera && o.track_id == track_id)
            .map(|o| o.pedestrian.as_str())
    }
}

pub fn pedestrian_id(k: usize) -> String {
    format!("p{}", k + 1)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate(spec: &SceneSpec) -> Result<Scene, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [sx, sy] = spec.ground.slope;
    let plane = PlaneModel::new([-sx, -sy, 1.0, -spec.ground.offset_m])?;
    let normal = plane.normal();
    let world_at = |x: f64, y: f64| plane.from_ground_frame(&WorldPoint::new(x, y, 0.0));

    let rig = &spec.cameras;
    let target = world_at(0.0, 0.0);
    let mut cameras = Vec::with_capacity(rig.count);
    for c in 0..rig.count {
        let a = (rig.start_deg + c as f64 * rig.spacing_deg).to_radians();
        let (x, y) = (rig.ring_radius_m * a.cos(), rig.ring_radius_m * a.sin());
        let ground_z = sx * x + sy * y + spec.ground.offset_m;
        let center = WorldPoint::new(x, y, ground_z + rig.height_m);
        cameras.push(CameraModel::look_at(
            format!("cam{}", c + 1),
            center,
            target,
            rig.focal_px,
            rig.width,
            rig.height,
        )?);
    }
    let cam_ids: Vec<String> = cameras.iter().map(|c| c.id().to_string()).collect();
    let sync = spec.sync_frames();
    let offsets: Vec<i64> = sync.iter().map(|s| s - sync[0]).collect();

    let n_frames = spec.frame_count();
    let truth_xy = walk_pedestrians(spec, &mut rng)?;
    let sway_phase: Vec<f64> = (0..spec.pedestrians).map(|_| rng.random_range(0.0..2.0 * PI)).collect();

    // Per camera: observations grouped into visible runs.
    let mut tracks: BTreeMap<String, Vec<Track2D>> = BTreeMap::new();
    let mut records: BTreeMap<(String, u64), Vec<ObservationRecord>> = BTreeMap::new();
    let mut owners = Vec::new();
    for (c, cam) in cameras.iter().enumerate() {
        // (pedestrian, run) -> observations
        let mut runs: Vec<(usize, Vec<TrackObservation>, Vec<ObservationRecord>)> = Vec::new();
        let mut open: Vec<Option<usize>> = vec![None; spec.pedestrians];
        for g in 0..n_frames {
            let local = g + offsets[c];
            let t = g as f64 / spec.fps;
            for (k, path) in truth_xy.iter().enumerate() {
                let (x, y) = path[g as usize];
                let sway = spec.noise.sway_amplitude_m * (2.0 * PI * spec.noise.sway_freq_hz * t + sway_phase[k]).sin();
                let foot = world_at(x, y);
                let world = WorldPoint::from_vector(&(foot.to_vector() + normal * sway));
                let noise = PixelPoint::new(
                    spec.noise.pixel_sigma * gauss(&mut rng),
                    spec.noise.pixel_sigma * gauss(&mut rng),
                );
                let visible = local >= 0
                    && cam.project_homogeneous(&world).z > 0.0
                    && cam.project(&world).is_ok_and(|p| cam.contains(p, 0.0));
                if !visible {
                    open[k] = None;
                    continue;
                }
                let exact = cam.project(&world)?;
                let obs = TrackObservation {
                    frame: local,
                    point: PixelPoint::new(exact.x + noise.x, exact.y + noise.y),
                };
                let rec = ObservationRecord {
                    global_frame: g,
                    pedestrian: k,
                    world,
                    noise,
                };
                let run = match open[k] {
                    Some(r) => r,
                    None => {
                        runs.push((k, Vec::new(), Vec::new()));
                        open[k] = Some(runs.len() - 1);
                        runs.len() - 1
                    }
                };
                runs[run].1.push(obs);
                runs[run].2.push(rec);
            }
        }
        // Runs are created in order of first appearance; ids follow a
        // shuffled key so they do not line up across cameras.
        let mut order: Vec<(u64, usize)> = runs.iter().enumerate().map(|(i, _)| (rng.random::<u64>(), i)).collect();
        order.sort();
        let cam_id = &cam_ids[c];
        let list = tracks.entry(cam_id.clone()).or_default();
        for (rank, (_, i)) in order.into_iter().enumerate() {
            let track_id = rank as u64 + 1;
            let (k, obs, recs) = std::mem::take(&mut runs[i]);
            list.push(Track2D {
                camera_id: cam_id.clone(),
                track_id,
                observations: obs,
            });
            records.insert((cam_id.clone(), track_id), recs);
            owners.push(TrackOwner {
                camera: cam_id.clone(),
                track_id,
                pedestrian: pedestrian_id(k),
            });
        }
        list.sort_by_key(|t| t.track_id);
    }
    owners.sort_by(|a, b| (&a.camera, a.track_id).cmp(&(&b.camera, b.track_id)));

    let last_local = n_frames + offsets.iter().copied().max().unwrap_or(0);
    let mut luminance = BTreeMap::new();
    for (c, id) in cam_ids.iter().enumerate() {
        let samples: Vec<(i64, f64)> = (0..last_local.max(sync[c] + MIN_SYNC_FRAME))
            .map(|f| {
                let base = if f >= sync[c] { LUMINANCE_ON } else { LUMINANCE_OFF };
                (f, base + spec.noise.luminance_sigma * gauss(&mut rng))
            })
            .collect();
        luminance.insert(
            id.clone(),
            LuminanceSeries::new(id.clone(), samples, spec.fps).expect("frames increase"),
        );
    }

    let (ground_points, ground_inlier) = ground_samples(spec, &plane, &mut rng);

    let (cart_labels, cart_truth) = match &spec.cart {
        Some(cs) => {
            let (labels, truth) = cart_run(spec, cs, &cameras, &offsets, &plane, &mut rng)?;
            (labels, Some(truth))
        }
        None => (Vec::new(), None),
    };

    let truth: Vec<Trajectory3D> = truth_xy
        .iter()
        .enumerate()
        .map(|(k, path)| {
            let samples = path
                .iter()
                .enumerate()
                .map(|(g, (x, y))| Sample::new(g as i64, *x, *y))
                .collect();
            Trajectory3D::with_provenance(pedestrian_id(k), samples, Provenance::Imported).expect("valid truth")
        })
        .collect();

    let ledger = Ledger {
        seed: spec.seed,
        session: spec.session.clone(),
        fps: spec.fps,
        frames: n_frames,
        pedestrians: spec.pedestrians,
        plane: plane.coeffs(),
        reference_camera: cam_ids[0].clone(),
        sync_frames: cam_ids.iter().cloned().zip(sync.iter().copied()).collect(),
        offsets: cam_ids.iter().cloned().zip(offsets.iter().copied()).collect(),
        track_owners: owners,
        ground_inliers: ground_inlier.iter().filter(|b| **b).count(),
    };

    Ok(Scene {
        spec: spec.clone(),
        cameras,
        plane,
        truth,
        tracks,
        records,
        luminance,
        ground_points,
        ground_inlier,
        cart_labels,
        cart_truth,
        ledger,
    })
}

/// Ground-frame positions of every pedestrian at every frame.
fn walk_pedestrians(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<(f64, f64)>>, SynthError> {
    let (hx, hy) = (spec.arena_m[0] / 2.0, spec.arena_m[1] / 2.0);
    let sep = spec.walk.min_separation_m;
    let dt = 1.0 / spec.fps;
    let n_frames = spec.frame_count() as usize;
    let goal_in_arena = |rng: &mut ChaCha8Rng| (rng.random_range(-hx..=hx), rng.random_range(-hy..=hy));

    let mut pos: Vec<(f64, f64)> = Vec::with_capacity(spec.pedestrians);
    for _ in 0..spec.pedestrians {
        let mut placed = false;
        for _ in 0..10_000 {
            let p = goal_in_arena(rng);
            if pos.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= sep) {
                pos.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SynthError::InvalidSpec("arena too small for the pedestrian count".into()));
        }
    }
    let mut goal: Vec<(f64, f64)> = (0..spec.pedestrians).map(|_| goal_in_arena(rng)).collect();
    let speed: Vec<f64> = (0..spec.pedestrians)
        .map(|_| rng.random_range(spec.walk.speed_min_mps..=spec.walk.speed_max_mps))
        .collect();
    let p_change = (spec.walk.goal_change_rate_hz * dt).min(1.0);

    let mut paths: Vec<Vec<(f64, f64)>> = pos.iter().map(|p| vec![*p]).collect();
    for _ in 1..n_frames {
        for k in 0..spec.pedestrians {
            let step = speed[k] * dt;
            let (dx, dy) = (goal[k].0 - pos[k].0, goal[k].1 - pos[k].1);
            let dist = dx.hypot(dy);
            if rng.random_bool(p_change) || dist <= step {
                goal[k] = goal_in_arena(rng);
            }
            let (dx, dy) = (goal[k].0 - pos[k].0, goal[k].1 - pos[k].1);
            let dist = dx.hypot(dy);
            if dist > 0.0 {
                let s = step.min(dist);
                let next = (pos[k].0 + s * dx / dist, pos[k].1 + s * dy / dist);
                let clear = (0..spec.pedestrians)
                    .filter(|j| *j != k)
                    .all(|j| (next.0 - pos[j].0).hypot(next.1 - pos[j].1) >= sep);
                if clear {
                    pos[k] = next;
                } else {
                    goal[k] = goal_in_arena(rng);
                }
            }
            paths[k].push(pos[k]);
        }
    }
    Ok(paths)
}

fn ground_samples(spec: &SceneSpec, plane: &PlaneModel, rng: &mut ChaCha8Rng) -> (Vec<WorldPoint>, Vec<bool>) {
    let g = &spec.ground;
    let half = g.extent_m / 2.0;
    let n = plane.normal();
    let mut pts = Vec::with_capacity(g.points);
    let mut inlier = Vec::with_capacity(g.points);
    for _ in 0..g.points {
        let x = rng.random_range(-half..=half);
        let y = rng.random_range(-half..=half);
        let outlier = rng.random_bool(g.outlier_fraction);
        let offset = if outlier {
            rng.random_range(0.5..1.5)
        } else {
            g.point_noise_m * gauss(rng)
        };
        let on = plane.from_ground_frame(&WorldPoint::new(x, y, 0.0));
        pts.push(WorldPoint::from_vector(&(on.to_vector() + n * offset)));
        inlier.push(!outlier);
    }
    (pts, inlier)
}

/// A cart loop around a rectangle inside the arena, labeled by every camera
/// that sees it on its labeling frames.
fn cart_run(
    spec: &SceneSpec,
    cs: &CartSpec,
    cameras: &[CameraModel],
    offsets: &[i64],
    plane: &PlaneModel,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<CartLabel>, Trajectory3D), SynthError> {
    let (hx, hy) = (spec.arena_m[0] * 0.3, spec.arena_m[1] * 0.3);
    let corners = [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)];
    let perimeter = 4.0 * (hx + hy);
    let start = rng.random_range(0.0..perimeter);
    let at = |s: f64| -> (f64, f64) {
        let mut s = s.rem_euclid(perimeter);
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            if s <= len {
                let t = s / len;
                return (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            }
            s -= len;
        }
        corners[0]
    };
    let n_frames = spec.frame_count();
    let mut samples = Vec::with_capacity(n_frames as usize);
    let mut labels = Vec::new();
    let h = match cs.source {
        LabelSource::Tag => cs.tag_height_m,
        LabelSource::Manual => 0.0,
    };
    for g in 0..n_frames {
        let (x, y) = at(start + cs.speed_mps * g as f64 / spec.fps);
        samples.push(Sample::new(g, x, y));
        let tag = plane.from_ground_frame(&WorldPoint::new(x, y, h));
        for (c, cam) in cameras.iter().enumerate() {
            let local = g + offsets[c];
            if local < 0 || local % cs.label_every != 0 || cam.project_homogeneous(&tag).z <= 0.0 {
                continue;
            }
            let px = cam.project(&tag)?;
            if cam.contains(px, 0.0) {
                labels.push(CartLabel {
                    camera_id: cam.id().to_string(),
                    frame: local,
                    pixel: px,
                    source: cs.source,
                });
            }
        }
    }
    let truth = Trajectory3D::with_provenance(crate::cart::CART_ID, samples, Provenance::Imported).expect("valid truth");
    Ok((labels, truth))
}

/// File names inside a written session directory.
pub mod layout {
    pub const MANIFEST: &str = "manifest.json";
    pub const CALIBRATION: &str = "cameras.json";
    pub const GROUND_POINTS: &str = "ground_points.csv";
    pub const CART_LABELS: &str = "cart_labels.csv";
    pub const TRUTH: &str = "truth.csv";
    pub const CART_TRUTH: &str = "cart_truth.csv";
    pub const LEDGER: &str = "ledger.json";
}

/// Writes the scene as a session directory and returns the manifest path.
pub fn write_session(scene: &Scene, dir: &Path) -> Result<PathBuf, SynthError> {
    let spec = &scene.spec;
    write_calibration(&dir.join(layout::CALIBRATION), &scene.cameras)?;
    write_ground_points(&dir.join(layout::GROUND_POINTS), &scene.ground_points)?;
    let mut track_paths = BTreeMap::new();
    let mut lum_paths = BTreeMap::new();
    for (cam, list) in &scene.tracks {
        let rel = PathBuf::from("tracks").join(format!("{cam}.csv"));
        write_tracks(&dir.join(&rel), list)?;
        track_paths.insert(cam.clone(), rel);
    }
    for (cam, series) in &scene.luminance {
        let rel = PathBuf::from("luminance").join(format!("{cam}.csv"));
        write_luminance(&dir.join(&rel), series)?;
        lum_paths.insert(cam.clone(), rel);
    }
    let (cart_labels, cart_tag_height_m) = match &spec.cart {
        Some(cs) => {
            write_cart_labels(&dir.join(layout::CART_LABELS), &scene.cart_labels)?;
            (Some(PathBuf::from(layout::CART_LABELS)), Some(cs.tag_height_m))
        }
        None => (None, None),
    };
    let truth = TrajectoryFile {
        session: spec.session.clone(),
        fps: spec.fps,
        native_fps: None,
        trajectories: scene.truth.clone(),
    };
    write_trajectories(&dir.join(layout::TRUTH), &truth)?;
    if let Some(cart) = &scene.cart_truth {
        let file = TrajectoryFile {
            trajectories: vec![cart.clone()],
            ..truth
        };
        write_trajectories(&dir.join(layout::CART_TRUTH), &file)?;
    }
    let ledger = serde_json::to_string_pretty(&scene.ledger).expect("ledger serializes");
    crate::ingest::write_text(&dir.join(layout::LEDGER), &(ledger + "\n"))?;

    let manifest_text = serde_json::json!({
        "session": spec.session,
        "calibration": layout::CALIBRATION,
        "tracks": track_paths,
        "luminance": lum_paths,
        "ground_points": layout::GROUND_POINTS,
        "cart_labels": cart_labels,
        "cart_tag_height_m": cart_tag_height_m,
        "native_fps": spec.fps,
        "output_fps": spec.output_fps,
        "reference_camera": scene.ledger.reference_camera,
        "seed": spec.seed,
    });
    let mut manifest = SessionManifest::parse(&manifest_text.to_string(), dir)?;
    if manifest.cart_labels.is_none() {
        manifest.cart_tag_height_m = None;
    }
    let path = dir.join(layout::MANIFEST);
    manifest.write(&path)?;
    Ok(path)
}

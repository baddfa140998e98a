#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trajlab::fixtures::{oblique_camera, oblique_camera_b};
use trajlab::fuse::Trajectory3D;
use trajlab::geom::{
    backproject_to_plane, fit_plane_ransac, triangulate_plane_constrained, CameraModel, PixelPoint, PlaneModel,
    RansacParams, WorldPoint,
};
use trajlab::pipeline::{run_all, Export, Session};
use trajlab::synth::{generate, write_session, Scene, SceneSpec};

/// Pooled RMSE of `estimated` samples against the truth trajectory closest
/// on average to each estimated trajectory, over frames both contain.
pub fn rmse_to_nearest_truth(estimated: &[Trajectory3D], truth: &[Trajectory3D]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in estimated {
        let best = truth
            .iter()
            .filter_map(|g| {
                let d: Vec<f64> = t
                    .samples()
                    .iter()
                    .filter_map(|s| g.sample_at(s.frame).map(|q| s.distance(q)))
                    .collect();
                (!d.is_empty()).then(|| (d.iter().sum::<f64>() / d.len() as f64, d))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, d)) = best {
            sum += d.iter().map(|e| e * e).sum::<f64>();
            n += d.len();
        }
    }
    ((sum / n.max(1) as f64).sqrt(), n)
}

pub fn write_scene(spec: &SceneSpec, dir: &Path) -> (Scene, PathBuf) {
    let scene = generate(spec).expect("valid spec");
    let manifest = write_session(&scene, dir).expect("session written");
    (scene, manifest)
}

/// Generates, writes and runs the whole pipeline on a scene.
pub fn run_scene(spec: &SceneSpec, dir: &Path, workers: usize) -> (Scene, Session, Export) {
    let (scene, manifest) = write_scene(spec, dir);
    let session = Session::open_with_seed(&manifest, None, None).expect("session opens");
    let export = run_all(&session, workers).expect("pipeline runs");
    (scene, session, export)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A camera on a random position 5-30 m from the origin, 2-15 m high,
/// looking at a random ground point near the origin.
pub fn random_camera(rng: &mut ChaCha8Rng, id: &str) -> CameraModel {
    let r = rng.random_range(5.0..30.0);
    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let center = WorldPoint::new(r * a.cos(), r * a.sin(), rng.random_range(2.0..15.0));
    let target = WorldPoint::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0);
    CameraModel::look_at(id, center, target, rng.random_range(300.0..2500.0), 1920, 1080).expect("valid camera")
}

/// Position errors over a batch of noisy two-view instances: the library's
/// triangulation against the 1 mm grid-search reprojection oracle.
pub struct TriangulationBatch {
    pub svd_rmse: f64,
    pub oracle_rmse: f64,
}

impl TriangulationBatch {
    pub fn relative_gap(&self) -> f64 {
        (self.svd_rmse - self.oracle_rmse).abs() / self.oracle_rmse
    }
}

pub fn triangulation_batch(seed: u64, n: usize) -> TriangulationBatch {
    let (a, b) = (oblique_camera(), oblique_camera_b());
    let plane = PlaneModel::horizontal(0.0);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rng = rng(seed);
    let (mut svd, mut oracle) = (0.0, 0.0);
    for _ in 0..n {
        let truth = WorldPoint::new(rng.random_range(-3.0..7.0), rng.random_range(-4.0..6.0), 0.0);
        let mut observe = |cam: &CameraModel| {
            let (u, v) = oracles::hand_project(cam, &truth);
            PixelPoint::new(u + noise.sample(&mut rng), v + noise.sample(&mut rng))
        };
        let (oa, ob) = (observe(&a), observe(&b));
        let t = triangulate_plane_constrained(&a, oa, &b, ob, &plane).expect("triangulates");
        svd += t.point.distance(&truth).powi(2);
        let g = oracles::grid_search_z0(&[(&a, oa), (&b, ob)], (truth.x, truth.y), 150, 1e-3);
        oracle += g.distance(&truth).powi(2);
    }
    TriangulationBatch {
        svd_rmse: (svd / n as f64).sqrt(),
        oracle_rmse: (oracle / n as f64).sqrt(),
    }
}

/// 1000 points on z = 0.1x + 0.2y + 3 with σ = 0.01 m noise and 20% outliers
/// lifted by 1 m. Returns the ∞-norm distance between the RANSAC plane and the
/// TLS oracle fitted to the true inliers.
pub fn ransac_vs_tls(seed: u64) -> f64 {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut points = Vec::new();
    let mut inliers = Vec::new();
    for i in 0..1000 {
        let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let z = 0.1 * x + 0.2 * y + 3.0 + noise.sample(&mut rng);
        if i % 5 == 0 {
            points.push(WorldPoint::new(x, y, z + 1.0));
        } else {
            let p = WorldPoint::new(x, y, z);
            points.push(p);
            inliers.push(p);
        }
    }
    let fit = fit_plane_ransac(&points, &RansacParams { seed, ..RansacParams::default() }).expect("plane fits");
    let oracle = oracles::tls_plane(&inliers);
    fit.plane
        .coeffs()
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Pooled ground-frame RMSE of single-view backprojection of every observed
/// track point against the generator truth.
pub fn single_view_rmse(scene: &Scene) -> f64 {
    let cams = scene.camera_map();
    let (mut sum, mut n) = (0.0, 0usize);
    for ((cam, id), records) in &scene.records {
        let track = scene.tracks[cam].iter().find(|t| t.track_id == *id).expect("recorded track exists");
        for (o, r) in track.observations.iter().zip(records) {
            let p = backproject_to_plane(&cams[cam], o.point, &scene.plane, 0.0).expect("ray hits ground");
            let g = scene.plane.to_ground_frame(&p);
            let t = scene.truth[r.pedestrian].samples()[r.global_frame as usize];
            sum += (g.x - t.x).powi(2) + (g.y - t.y).powi(2);
            n += 1;
        }
    }
    (sum / n as f64).sqrt()
}

/// A luminance step from `base` to `base + height` whose first high sample is
/// index `at`, plus Gaussian noise.
pub fn step_series(seed: u64, n: usize, at: usize, base: f64, height: f64, sigma: f64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            let level = if i >= at { base + height } else { base };
            if sigma > 0.0 {
                level + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
            } else {
                level
            }
        })
        .collect()
}

/// A straight walk with small seeded jitter, on frames `start..start + len`.
pub fn random_walk(seed: u64, id: &str, start: i64, len: usize) -> Trajectory3D {
    let mut rng = rng(seed);
    let (mut x, mut y) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let (vx, vy) = (rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02));
    let samples = (0..len)
        .map(|k| {
            x += vx + rng.random_range(-0.002..0.002);
            y += vy + rng.random_range(-0.002..0.002);
            trajlab::fuse::Sample::new(start + k as i64, x, y)
        })
        .collect();
    Trajectory3D::with_provenance(id, samples, trajlab::fuse::Provenance::Imported).expect("valid walk")
}

/// Builds a random script of corrections that each succeed when applied in
/// order to `initial`. Returns the script and the state it produces.
pub fn random_correction_script(
    seed: u64,
    initial: &[Trajectory3D],
    steps: usize,
) -> (Vec<trajlab::fuse::Correction>, Vec<Trajectory3D>) {
    use trajlab::fuse::{apply_correction, Correction, CorrectionOp, Sample};
    let mut rng = rng(seed);
    let mut state = initial.to_vec();
    let mut script = Vec::new();
    let mut fresh = 0;
    while script.len() < steps {
        if state.is_empty() {
            break;
        }
        let pick = |rng: &mut ChaCha8Rng, state: &[Trajectory3D]| state[rng.random_range(0..state.len())].clone();
        let t = pick(&mut rng, &state);
        let (first, last) = (t.first_frame(), t.last_frame());
        let frame = rng.random_range(first..=last);
        let op = match rng.random_range(0..6) {
            0 => CorrectionOp::Merge {
                a: t.id().to_string(),
                b: pick(&mut rng, &state).id().to_string(),
            },
            1 => CorrectionOp::Split { id: t.id().to_string(), frame },
            2 => {
                fresh += 1;
                CorrectionOp::Relabel {
                    old: t.id().to_string(),
                    new: format!("r{fresh}"),
                }
            }
            3 => CorrectionOp::Delete {
                id: t.id().to_string(),
                from: frame,
                to: (frame + rng.random_range(0..20)).min(last),
            },
            4 => CorrectionOp::MarkVerified { id: t.id().to_string() },
            _ => {
                fresh += 1;
                let start = rng.random_range(-500..5000);
                let (x, y) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let (vx, vy) = (rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02));
                CorrectionOp::AddManual {
                    id: format!("m{fresh}"),
                    samples: (0..rng.random_range(1..40))
                        .map(|k| Sample::new(start + k, x + vx * k as f64, y + vy * k as f64))
                        .collect(),
                }
            }
        };
        let c = Correction::new(op, "script", format!("2026-01-01T00:00:{:02}Z", script.len() % 60));
        let mut next = state.clone();
        if apply_correction(&mut next, &c).is_ok() {
            state = next;
            script.push(c);
        }
    }
    (script, state)
}

/// Swaps the tails of two trajectories from `frame` on, the way a tracker
/// ID switch does. Both must cover `frame`.
pub fn swap_tails(trajs: &mut [Trajectory3D], i: usize, j: usize, frame: i64) {
    use trajlab::fuse::Provenance;
    let split = |t: &Trajectory3D| {
        let (head, tail): (Vec<_>, Vec<_>) = t.samples().iter().partition(|s| s.frame < frame);
        (head, tail)
    };
    let (hi, ti) = split(&trajs[i]);
    let (hj, tj) = split(&trajs[j]);
    let join = |h: Vec<trajlab::fuse::Sample>, t: Vec<trajlab::fuse::Sample>| h.into_iter().chain(t).collect();
    let (idi, idj) = (trajs[i].id().to_string(), trajs[j].id().to_string());
    trajs[i] = Trajectory3D::with_provenance(idi, join(hi, tj), Provenance::Imported).expect("same frames");
    trajs[j] = Trajectory3D::with_provenance(idj, join(hj, ti), Provenance::Imported).expect("same frames");
}

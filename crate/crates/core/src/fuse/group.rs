use std::collections::BTreeMap;

use super::associate::GlobalTrack;
use super::trajectory::{Anomaly, AnomalyKind, Provenance, Sample, Segment, Trajectory3D};
use super::FuseError;
use crate::geom::{
    backproject_to_plane, reprojection_error, triangulate_plane_constrained, CameraModel, PixelPoint,
    PlaneModel, WorldPoint,
};

/// Everything fusion needs besides the tracks themselves.
#[derive(Debug, Clone, Copy)]
pub struct FusionContext<'a> {
    pub cameras: &'a BTreeMap<String, CameraModel>,
    pub plane: &'a PlaneModel,
}

struct SegmentEstimate {
    points: Vec<WorldPoint>,
    provenance: Provenance,
    mean_reproj_px: f64,
}

/// Fuses one associated group of tracks into a ground trajectory.
///
/// Frames are split into segments of constant camera visibility. A segment
/// seen by two or more cameras uses the single camera pair whose
/// plane-constrained triangulations have the lowest mean reprojection error
/// over the whole segment; pairs that are degenerate on any frame are skipped.
/// Segments seen by one camera, or with no usable pair, fall back to
/// ray/plane intersection. Estimates are projected orthogonally onto the
/// plane and mapped to the `z = 0` ground frame.
pub fn fuse_group(id: &str, tracks: &[&GlobalTrack], ctx: &FusionContext<'_>) -> Result<Trajectory3D, FuseError> {
    if tracks.is_empty() || tracks.iter().all(|t| t.observations.is_empty()) {
        return Err(FuseError::EmptyGroup);
    }
    let mut by_camera: BTreeMap<&str, &GlobalTrack> = BTreeMap::new();
    for t in tracks {
        if !ctx.cameras.contains_key(&t.key.camera) {
            return Err(FuseError::UnknownCamera(t.key.camera.clone()));
        }
        by_camera.insert(t.key.camera.as_str(), t);
    }

    // frame -> observations sorted by camera id
    let mut frames: BTreeMap<i64, Vec<(&str, PixelPoint)>> = BTreeMap::new();
    for (cam, t) in &by_camera {
        for (f, p) in &t.observations {
            frames.entry(*f).or_default().push((cam, *p));
        }
    }

    let mut runs: Vec<Vec<(i64, Vec<(&str, PixelPoint)>)>> = Vec::new();
    for (f, obs) in frames {
        let extend = runs.last().is_some_and(|run| {
            let (lf, lobs) = run.last().expect("runs are non-empty");
            *lf + 1 == f && lobs.iter().map(|o| o.0).eq(obs.iter().map(|o| o.0))
        });
        if extend {
            runs.last_mut().expect("checked").push((f, obs));
        } else {
            runs.push(vec![(f, obs)]);
        }
    }

    let mut samples = Vec::new();
    let mut segments = Vec::new();
    let mut flags = Vec::new();
    for run in &runs {
        let start = run[0].0;
        let end = run[run.len() - 1].0;
        let cams: Vec<&str> = run[0].1.iter().map(|o| o.0).collect();
        let estimate = match best_pair(run, &cams, ctx)? {
            Some(e) => e,
            None => {
                if cams.len() >= 2 {
                    flags.push(Anomaly {
                        kind: AnomalyKind::DegeneratePair,
                        start,
                        end,
                        magnitude: (end - start + 1) as f64,
                    });
                }
                single_view(run, &cams, ctx)?
            }
        };
        for ((f, _), p) in run.iter().zip(&estimate.points) {
            let g = ctx.plane.to_ground_frame(p);
            samples.push(Sample::new(*f, g.x, g.y));
        }
        segments.push(Segment {
            start,
            end,
            provenance: estimate.provenance,
            mean_reproj_px: Some(estimate.mean_reproj_px),
        });
    }

    let mut traj = Trajectory3D::new(id, samples, segments)?;
    traj.set_flags(flags);
    Ok(traj)
}

fn best_pair(
    run: &[(i64, Vec<(&str, PixelPoint)>)],
    cams: &[&str],
    ctx: &FusionContext<'_>,
) -> Result<Option<SegmentEstimate>, FuseError> {
    let mut best: Option<SegmentEstimate> = None;
    for i in 0..cams.len() {
        'pair: for j in i + 1..cams.len() {
            let (cam_i, cam_j) = (&ctx.cameras[cams[i]], &ctx.cameras[cams[j]]);
            let mut points = Vec::with_capacity(run.len());
            let mut total = 0.0;
            for (_, obs) in run {
                let (pi, pj) = (obs[i].1, obs[j].1);
                let t = match triangulate_plane_constrained(cam_i, pi, cam_j, pj, ctx.plane) {
                    Ok(t) if t.well_conditioned && !t.same_camera => t,
                    _ => continue 'pair,
                };
                let p = ctx.plane.project_onto(&t.point);
                match reprojection_error(&[(cam_i, pi), (cam_j, pj)], &p) {
                    Ok(e) => total += e,
                    Err(_) => continue 'pair,
                }
                points.push(p);
            }
            let mean = total / run.len() as f64;
            if best.as_ref().is_none_or(|b| mean < b.mean_reproj_px) {
                best = Some(SegmentEstimate {
                    points,
                    provenance: Provenance::Pair {
                        cameras: [cams[i].to_string(), cams[j].to_string()],
                    },
                    mean_reproj_px: mean,
                });
            }
        }
    }
    Ok(best)
}

/// Ray/plane fallback from the camera that views the segment most steeply.
fn single_view(
    run: &[(i64, Vec<(&str, PixelPoint)>)],
    cams: &[&str],
    ctx: &FusionContext<'_>,
) -> Result<SegmentEstimate, FuseError> {
    let n = ctx.plane.normal();
    let steepness = |k: usize| -> f64 {
        let cam = &ctx.cameras[cams[k]];
        run.iter()
            .map(|(_, obs)| n.dot(&cam.ray_direction(obs[k].1).normalize()).abs())
            .sum::<f64>()
    };
    let mut pick = 0;
    let mut pick_steep = steepness(0);
    for k in 1..cams.len() {
        let s = steepness(k);
        if s > pick_steep {
            pick = k;
            pick_steep = s;
        }
    }
    let cam = &ctx.cameras[cams[pick]];
    let mut points = Vec::with_capacity(run.len());
    let mut total = 0.0;
    for (f, obs) in run {
        let p = backproject_to_plane(cam, obs[pick].1, ctx.plane, 0.0)
            .map_err(|source| FuseError::Geom { frame: *f, source })?;
        total += reprojection_error(&[(cam, obs[pick].1)], &p)
            .map_err(|source| FuseError::Geom { frame: *f, source })?;
        points.push(p);
    }
    Ok(SegmentEstimate {
        points,
        provenance: Provenance::SingleView {
            camera: cams[pick].to_string(),
        },
        mean_reproj_px: total / run.len() as f64,
    })
}

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assignment::min_cost_assignment;
use super::group::FusionContext;
use crate::geom::{reprojection_error, triangulate_plane_constrained, PixelPoint};
use crate::ingest::Track2D;

/// Identifies one per-camera track.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackKey {
    pub camera: String,
    pub track_id: u64,
}

impl std::fmt::Display for TrackKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.camera, self.track_id)
    }
}

/// A track re-indexed on the global (reference camera) timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrack {
    pub key: TrackKey,
    /// Sorted by global frame.
    pub observations: Vec<(i64, PixelPoint)>,
}

impl GlobalTrack {
    pub fn from_track(track: &Track2D, offset: i64) -> Self {
        Self {
            key: TrackKey {
                camera: track.camera_id.clone(),
                track_id: track.track_id,
            },
            observations: track
                .observations
                .iter()
                .map(|o| (o.frame - offset, o.point))
                .collect(),
        }
    }

    pub fn at(&self, frame: i64) -> Option<PixelPoint> {
        self.observations
            .binary_search_by_key(&frame, |(f, _)| *f)
            .ok()
            .map(|i| self.observations[i].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationParams {
    /// Matches with a higher mean reprojection error are discarded.
    pub max_mean_reproj_px: f64,
    /// Track pairs sharing fewer global frames are never scored.
    pub min_overlap_frames: usize,
    /// At most this many evenly spaced overlap frames are triangulated per pair.
    pub max_score_frames: usize,
}

impl Default for AssociationParams {
    fn default() -> Self {
        Self {
            max_mean_reproj_px: 15.0,
            min_overlap_frames: 30,
            max_score_frames: 120,
        }
    }
}

/// Matching cost of one cross-camera track pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: TrackKey,
    pub b: TrackKey,
    pub overlap_frames: usize,
    /// `None` when no overlap frame produced a well-conditioned estimate.
    pub mean_reproj_px: Option<f64>,
}

/// A transitive group that would have held two tracks of one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationConflict {
    pub camera: String,
    pub tracks: Vec<TrackKey>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Association {
    /// Every input track appears in exactly one group; members sorted.
    pub groups: Vec<Vec<TrackKey>>,
    /// All scored pairs in (camera pair, track a, track b) order.
    pub scores: Vec<PairScore>,
    /// Accepted pairwise matches after the consistency check.
    pub matches: Vec<(TrackKey, TrackKey)>,
    pub conflicts: Vec<AssociationConflict>,
}

/// Cross-camera association by plane-constrained reprojection error.
///
/// Every temporally overlapping pair of tracks from two different cameras is
/// scored by the mean reprojection error of its triangulations (projected onto
/// the ground plane) over the overlap. Each camera pair is then solved as an
/// optimal one-to-one assignment, pairwise matches are merged transitively,
/// and groups that would contain two tracks of one camera are broken up.
pub fn associate(tracks: &[GlobalTrack], ctx: &FusionContext<'_>, params: &AssociationParams) -> Association {
    let mut by_camera: BTreeMap<&str, Vec<&GlobalTrack>> = BTreeMap::new();
    for t in tracks {
        by_camera.entry(t.key.camera.as_str()).or_default().push(t);
    }
    for list in by_camera.values_mut() {
        list.sort_by(|a, b| a.key.cmp(&b.key));
    }
    let cameras: Vec<&str> = by_camera.keys().copied().collect();

    let mut candidates: Vec<(&GlobalTrack, &GlobalTrack)> = Vec::new();
    for (i, ca) in cameras.iter().enumerate() {
        for cb in &cameras[i + 1..] {
            for ta in &by_camera[ca] {
                for tb in &by_camera[cb] {
                    candidates.push((ta, tb));
                }
            }
        }
    }
    let scores: Vec<PairScore> = candidates
        .par_iter()
        .filter_map(|(a, b)| score_pair(a, b, ctx, params))
        .collect();

    let mut matches: Vec<(TrackKey, TrackKey)> = Vec::new();
    for (i, ca) in cameras.iter().enumerate() {
        for cb in &cameras[i + 1..] {
            let rows = &by_camera[ca];
            let cols = &by_camera[cb];
            let row_index: BTreeMap<&TrackKey, usize> = rows.iter().enumerate().map(|(i, t)| (&t.key, i)).collect();
            let col_index: BTreeMap<&TrackKey, usize> = cols.iter().enumerate().map(|(i, t)| (&t.key, i)).collect();
            let mut costs = vec![vec![None; cols.len()]; rows.len()];
            for s in scores.iter().filter(|s| s.a.camera == *ca && s.b.camera == *cb) {
                if let Some(e) = s.mean_reproj_px.filter(|e| *e <= params.max_mean_reproj_px) {
                    costs[row_index[&s.a]][col_index[&s.b]] = Some(e);
                }
            }
            for (r, c) in min_cost_assignment(&costs).into_iter().enumerate() {
                if let Some(c) = c {
                    matches.push((rows[r].key.clone(), cols[c].key.clone()));
                }
            }
        }
    }

    let keys: Vec<TrackKey> = cameras
        .iter()
        .flat_map(|c| by_camera[c].iter().map(|t| t.key.clone()))
        .collect();
    let mut conflicts = Vec::new();
    let groups = loop {
        let groups = components(&keys, &matches);
        let clash = groups.iter().find_map(|g| {
            let mut seen: BTreeMap<&str, Vec<&TrackKey>> = BTreeMap::new();
            for k in g {
                seen.entry(k.camera.as_str()).or_default().push(k);
            }
            seen.into_iter().find(|(_, ks)| ks.len() > 1).map(|(cam, ks)| AssociationConflict {
                camera: cam.to_string(),
                tracks: ks.into_iter().cloned().collect(),
            })
        });
        match clash {
            None => break groups,
            Some(conflict) => {
                let bad: BTreeSet<&TrackKey> = conflict.tracks.iter().collect();
                matches.retain(|(a, b)| !bad.contains(a) && !bad.contains(b));
                conflicts.push(conflict);
            }
        }
    };

    Association {
        groups,
        scores,
        matches,
        conflicts,
    }
}

fn score_pair(a: &GlobalTrack, b: &GlobalTrack, ctx: &FusionContext<'_>, params: &AssociationParams) -> Option<PairScore> {
    let common = common_frames(a, b);
    if common.len() < params.min_overlap_frames || common.is_empty() {
        return None;
    }
    let cam_a = ctx.cameras.get(&a.key.camera)?;
    let cam_b = ctx.cameras.get(&b.key.camera)?;
    let picks = evenly_spaced(common.len(), params.max_score_frames.max(1));
    let mut total = 0.0;
    let mut n = 0usize;
    for i in picks {
        let (_, pa, pb) = common[i];
        let Ok(t) = triangulate_plane_constrained(cam_a, pa, cam_b, pb, ctx.plane) else {
            continue;
        };
        if !t.well_conditioned {
            continue;
        }
        let on_plane = ctx.plane.project_onto(&t.point);
        if let Ok(e) = reprojection_error(&[(cam_a, pa), (cam_b, pb)], &on_plane) {
            total += e;
            n += 1;
        }
    }
    Some(PairScore {
        a: a.key.clone(),
        b: b.key.clone(),
        overlap_frames: common.len(),
        mean_reproj_px: (n > 0).then(|| total / n as f64),
    })
}

fn common_frames(a: &GlobalTrack, b: &GlobalTrack) -> Vec<(i64, PixelPoint, PixelPoint)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.observations.len() && j < b.observations.len() {
        let (fa, pa) = a.observations[i];
        let (fb, pb) = b.observations[j];
        match fa.cmp(&fb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((fa, pa, pb));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// `min(n, k)` indices spread evenly over `0..n`, always including both ends.
fn evenly_spaced(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    if k == 1 {
        return vec![0];
    }
    (0..k).map(|i| i * (n - 1) / (k - 1)).collect()
}

/// Connected components of the match graph; deterministic order.
fn components(keys: &[TrackKey], matches: &[(TrackKey, TrackKey)]) -> Vec<Vec<TrackKey>> {
    let index: BTreeMap<&TrackKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in matches {
        let (ra, rb) = (find(&mut parent, index[a]), find(&mut parent, index[b]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<TrackKey>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(k.clone());
    }
    let mut out: Vec<Vec<TrackKey>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    out
}

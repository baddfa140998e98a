//! Independent reference computations. None of these call the library code
//! they are compared against.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use trajlab::fuse::{GlobalTrack, TrackKey};
use trajlab::geom::{CameraModel, PixelPoint, WorldPoint};

/// `P·X` evaluated entry by entry from the row-major matrix.
pub fn hand_project(cam: &CameraModel, x: &WorldPoint) -> (f64, f64) {
    let p = cam.row_major();
    let xh = [x.x, x.y, x.z, 1.0];
    let row = |r: usize| (0..4).map(|c| p[4 * r + c] * xh[c]).sum::<f64>();
    let w = row(2);
    (row(0) / w, row(1) / w)
}

/// Total-least-squares plane through `points`: the normal is the eigenvector
/// of the smallest eigenvalue of the scatter matrix about the centroid.
/// Returned with a unit normal and positive z component.
pub fn tls_plane(points: &[WorldPoint]) -> [f64; 4] {
    let n = points.len() as f64;
    let c = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::new(p.x, p.y, p.z))
        / n;
    let mut s = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p.x, p.y, p.z) - c;
        s += d * d.transpose();
    }
    let eig = SymmetricEigen::new(s);
    let k = (0..3)
        .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
        .unwrap();
    let mut normal: Vector3<f64> = eig.eigenvectors.column(k).into();
    normal /= normal.norm();
    if normal.z < 0.0 {
        normal = -normal;
    }
    [normal.x, normal.y, normal.z, -normal.dot(&c)]
}

/// Sum of squared pixel residuals of a point, using [`hand_project`].
pub fn reprojection_sse(obs: &[(&CameraModel, PixelPoint)], x: &WorldPoint) -> f64 {
    obs.iter()
        .map(|(cam, o)| {
            let (u, v) = hand_project(cam, x);
            (u - o.x).powi(2) + (v - o.y).powi(2)
        })
        .sum()
}

/// Minimizes the summed squared reprojection error over a square grid of
/// points on z = 0 centered at `center`, re-centering while the minimum sits
/// on the grid boundary.
pub fn grid_search_z0(obs: &[(&CameraModel, PixelPoint)], center: (f64, f64), half_cells: i32, step: f64) -> WorldPoint {
    let mut c = center;
    loop {
        let mut best = (f64::INFINITY, 0, 0);
        for i in -half_cells..=half_cells {
            for j in -half_cells..=half_cells {
                let x = WorldPoint::new(c.0 + f64::from(i) * step, c.1 + f64::from(j) * step, 0.0);
                let e = reprojection_sse(obs, &x);
                if e < best.0 {
                    best = (e, i, j);
                }
            }
        }
        let (_, i, j) = best;
        let x = (c.0 + f64::from(i) * step, c.1 + f64::from(j) * step);
        if i.abs() < half_cells && j.abs() < half_cells {
            return WorldPoint::new(x.0, x.1, 0.0);
        }
        c = x;
    }
}

/// Index of the first sample of the upper level of the best two-level
/// piecewise-constant fit, over every split point.
pub fn step_fit(values: &[f64]) -> usize {
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        prefix_sq[b] - prefix_sq[a] - s * s / m
    };
    (1..n)
        .min_by(|&a, &b| (sse(0, a) + sse(a, n)).total_cmp(&(sse(0, b) + sse(b, n))))
        .unwrap()
}

/// Exhaustive one-to-one assignment: maximizes the number of assigned rows,
/// then minimizes total cost. `None` entries cannot be assigned. Rows and
/// columns that share no feasible entry never interact, so each connected
/// component of the feasibility graph is solved separately by dynamic
/// programming over its column subsets (at most 24 columns per component).
pub fn brute_force_assignment(costs: &[Vec<Option<f64>>]) -> Vec<Option<usize>> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    // Components over rows 0..rows and columns rows..rows + cols.
    let mut parent: Vec<usize> = (0..rows + cols).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (r, row) in costs.iter().enumerate() {
        for (c, cost) in row.iter().enumerate() {
            if cost.is_some() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, rows + c));
                parent[a] = b;
            }
        }
    }
    let mut components: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for r in 0..rows {
        let root = find(&mut parent, r);
        components.entry(root).or_default().0.push(r);
    }
    for c in 0..cols {
        let root = find(&mut parent, rows + c);
        components.entry(root).or_default().1.push(c);
    }
    let mut out = vec![None; rows];
    for (rs, cs) in components.values() {
        let sub: Vec<Vec<Option<f64>>> = rs.iter().map(|&r| cs.iter().map(|&c| costs[r][c]).collect()).collect();
        for (k, c) in dense_assignment(&sub, cs.len()).into_iter().enumerate() {
            out[rs[k]] = c.map(|c| cs[c]);
        }
    }
    out
}

fn dense_assignment(costs: &[Vec<Option<f64>>], cols: usize) -> Vec<Option<usize>> {
    let rows = costs.len();
    assert!(cols <= 24);
    let states = 1usize << cols;
    let worse = |a: (u32, f64), b: (u32, f64)| a.0 < b.0 || (a.0 == b.0 && a.1 > b.1);
    let unreachable = (0u32, f64::INFINITY);
    let mut dp = vec![unreachable; states];
    dp[0] = (0, 0.0);
    // choice[r][mask] = column taken by row r to reach mask; u8::MAX if row r
    // was skipped.
    let mut choice = vec![vec![u8::MAX; states]; rows];
    for (r, row) in costs.iter().enumerate() {
        let mut next = dp.clone();
        for mask in 0..states {
            let cur = dp[mask];
            if cur.1.is_infinite() {
                continue;
            }
            for (c, cost) in row.iter().enumerate() {
                let Some(cost) = cost else { continue };
                if mask & (1 << c) != 0 {
                    continue;
                }
                let to = mask | (1 << c);
                let cand = (cur.0 + 1, cur.1 + cost);
                if worse(next[to], cand) {
                    next[to] = cand;
                    choice[r][to] = c as u8;
                }
            }
        }
        dp = next;
    }
    let mut mask = (0..states).fold(0, |best, m| if worse(dp[best], dp[m]) { m } else { best });
    let mut out = vec![None; rows];
    for r in (0..rows).rev() {
        let c = choice[r][mask];
        if c != u8::MAX {
            out[r] = Some(c as usize);
            mask &= !(1 << c);
        }
    }
    out
}

/// Ground point on z = 0 seen at `px`, through the inverse of the homography
/// formed by columns 1, 2 and 4 of P.
pub fn backproject_z0(cam: &CameraModel, px: PixelPoint) -> WorldPoint {
    let p = cam.row_major();
    let h = Matrix3::new(p[0], p[1], p[3], p[4], p[5], p[7], p[8], p[9], p[11]);
    let g = h.try_inverse().expect("camera does not see z = 0 edge-on") * Vector3::new(px.x, px.y, 1.0);
    WorldPoint::new(g.x / g.z, g.y / g.z, 0.0)
}

/// Mean pixel reprojection error of the midpoint of the two independent
/// ground backprojections, over every frame both tracks share.
pub fn pair_cost(a: &GlobalTrack, ca: &CameraModel, b: &GlobalTrack, cb: &CameraModel) -> (usize, f64) {
    let frames_b: BTreeMap<i64, PixelPoint> = b.observations.iter().copied().collect();
    let (mut n, mut total) = (0usize, 0.0);
    for (f, pa) in &a.observations {
        let Some(pb) = frames_b.get(f) else { continue };
        let (ga, gb) = (backproject_z0(ca, *pa), backproject_z0(cb, *pb));
        let mid = WorldPoint::new(0.5 * (ga.x + gb.x), 0.5 * (ga.y + gb.y), 0.0);
        let e = |cam: &CameraModel, o: &PixelPoint| reprojection_sse(&[(cam, *o)], &mid).sqrt();
        total += 0.5 * (e(ca, pa) + e(cb, pb));
        n += 1;
    }
    (n, if n > 0 { total / n as f64 } else { f64::INFINITY })
}

/// Groups from exhaustive per-camera-pair assignment on [`pair_cost`], with
/// the given overlap gate and cost threshold, merged transitively. Panics if
/// a group would hold two tracks of one camera.
pub fn oracle_groups(
    tracks: &[GlobalTrack],
    cams: &BTreeMap<String, CameraModel>,
    min_overlap: usize,
    max_cost: f64,
) -> BTreeSet<BTreeSet<TrackKey>> {
    let mut by_cam: BTreeMap<&str, Vec<&GlobalTrack>> = BTreeMap::new();
    for t in tracks {
        by_cam.entry(&t.key.camera).or_default().push(t);
    }
    let names: Vec<&str> = by_cam.keys().copied().collect();
    let mut parent: BTreeMap<TrackKey, TrackKey> = tracks.iter().map(|t| (t.key.clone(), t.key.clone())).collect();
    fn root(parent: &BTreeMap<TrackKey, TrackKey>, k: &TrackKey) -> TrackKey {
        let mut k = k.clone();
        while parent[&k] != k {
            k = parent[&k].clone();
        }
        k
    }
    for (i, ca) in names.iter().enumerate() {
        for cb in &names[i + 1..] {
            let (ra, rb) = (&by_cam[ca], &by_cam[cb]);
            let costs: Vec<Vec<Option<f64>>> = ra
                .iter()
                .map(|a| {
                    rb.iter()
                        .map(|b| {
                            let (n, c) = pair_cost(a, &cams[*ca], b, &cams[*cb]);
                            (n >= min_overlap && c <= max_cost).then_some(c)
                        })
                        .collect()
                })
                .collect();
            for (r, c) in brute_force_assignment(&costs).into_iter().enumerate() {
                if let Some(c) = c {
                    let (x, y) = (root(&parent, &ra[r].key), root(&parent, &rb[c].key));
                    parent.insert(x, y);
                }
            }
        }
    }
    let mut groups: BTreeMap<TrackKey, BTreeSet<TrackKey>> = BTreeMap::new();
    for t in tracks {
        groups.entry(root(&parent, &t.key)).or_default().insert(t.key.clone());
    }
    for g in groups.values() {
        let cams: BTreeSet<&str> = g.iter().map(|k| k.camera.as_str()).collect();
        assert_eq!(cams.len(), g.len(), "oracle group holds two tracks of one camera: {g:?}");
    }
    groups.into_values().collect()
}

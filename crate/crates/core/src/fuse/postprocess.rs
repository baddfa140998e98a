use super::trajectory::{Anomaly, AnomalyKind, Provenance, Sample, Trajectory3D};
use super::FuseError;

/// Fills holes of at most `max_gap_s` by linear interpolation and splits the
/// trajectory at longer holes. Split pieces after the first are named
/// `{id}_g2`, `{id}_g3`, … and the first piece carries a `gap` anomaly at its
/// last frame for every split.
pub fn interpolate_gaps(traj: &Trajectory3D, max_gap_s: f64, fps: f64) -> Vec<Trajectory3D> {
    let samples = traj.samples();
    let mut pieces: Vec<(Vec<Sample>, Vec<(i64, i64)>)> = vec![(vec![samples[0]], Vec::new())];
    let mut gaps: Vec<Anomaly> = Vec::new();
    for w in samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        let missing = b.frame - a.frame - 1;
        if missing > 0 {
            let gap_s = missing as f64 / fps;
            if gap_s <= max_gap_s {
                let piece = pieces.last_mut().expect("non-empty");
                let span = (b.frame - a.frame) as f64;
                for f in a.frame + 1..b.frame {
                    let t = (f - a.frame) as f64 / span;
                    piece.0.push(Sample::new(f, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
                }
                piece.1.push((a.frame + 1, b.frame - 1));
            } else {
                gaps.push(Anomaly {
                    kind: AnomalyKind::Gap,
                    start: a.frame,
                    end: a.frame,
                    magnitude: gap_s,
                });
                pieces.push((Vec::new(), Vec::new()));
            }
        }
        pieces.last_mut().expect("non-empty").0.push(b);
    }

    let mut out = Vec::with_capacity(pieces.len());
    for (k, (piece_samples, filled)) in pieces.into_iter().enumerate() {
        let id = if k == 0 {
            traj.id().to_string()
        } else {
            format!("{}_g{}", traj.id(), k + 1)
        };
        let (first, last) = (piece_samples[0].frame, piece_samples[piece_samples.len() - 1].frame);
        let base = traj
            .restricted(id, |f| f >= first && f <= last)
            .expect("piece holds original samples");
        let (id, _, mut segments, mut flags, verified, corrections) = base.into_parts();
        for (start, end) in filled {
            Trajectory3D::override_provenance(&mut segments, start, end, Provenance::Interpolated);
        }
        if k == 0 {
            flags.extend(gaps.iter().cloned());
        }
        out.push(Trajectory3D::from_parts(
            id,
            piece_samples,
            segments,
            flags,
            verified,
            corrections,
        ));
    }
    out
}

/// Centered moving average over `window` samples; windows shrink
/// symmetrically at the ends so the endpoints are kept.
pub fn smooth(traj: &Trajectory3D, window: usize) -> Result<Trajectory3D, FuseError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(FuseError::EvenWindow(window));
    }
    if window == 1 {
        return Ok(traj.clone());
    }
    let half = window / 2;
    let s = traj.samples();
    let n = s.len();
    let smoothed: Vec<Sample> = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let win = &s[i - h..=i + h];
            let k = win.len() as f64;
            Sample::new(
                s[i].frame,
                win.iter().map(|p| p.x).sum::<f64>() / k,
                win.iter().map(|p| p.y).sum::<f64>() / k,
            )
        })
        .collect();
    let (id, _, segments, flags, verified, corrections) = traj.clone().into_parts();
    Ok(Trajectory3D::from_parts(id, smoothed, segments, flags, verified, corrections))
}

/// Integer ratio `native / output`, or [`FuseError::NonIntegerRatio`].
pub fn subsample_ratio(native_fps: f64, output_fps: f64) -> Result<usize, FuseError> {
    let err = FuseError::NonIntegerRatio {
        native: native_fps,
        output: output_fps,
    };
    if !(native_fps > 0.0 && output_fps > 0.0) || !native_fps.is_finite() || !output_fps.is_finite() {
        return Err(err);
    }
    let ratio = native_fps / output_fps;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio {
        return Err(err);
    }
    Ok(rounded as usize)
}

/// Keeps every `native/output`-th sample starting from the first. Kept
/// samples are untouched; segments and flags are clipped to the kept span.
pub fn downsample(traj: &Trajectory3D, native_fps: f64, output_fps: f64) -> Result<Trajectory3D, FuseError> {
    let ratio = subsample_ratio(native_fps, output_fps)?;
    if ratio == 1 {
        return Ok(traj.clone());
    }
    let kept: Vec<Sample> = traj.samples().iter().step_by(ratio).copied().collect();
    let last = kept[kept.len() - 1].frame;
    let clipped = traj
        .restricted(traj.id().to_string(), |f| f <= last)
        .expect("first sample is kept");
    let (id, _, segments, flags, verified, corrections) = clipped.into_parts();
    Ok(Trajectory3D::from_parts(id, kept, segments, flags, verified, corrections))
}

use serde::{Deserialize, Serialize};

use super::trajectory::{Anomaly, AnomalyKind, Trajectory3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyParams {
    pub v_max_mps: f64,
    pub min_duration_s: f64,
    pub reproj_warn_px: f64,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self {
            v_max_mps: 4.0,
            min_duration_s: 1.0,
            reproj_warn_px: 10.0,
        }
    }
}

/// Flags spans a reviewer should look at. Gap and degenerate-pair flags
/// recorded by earlier stages are carried over; the rest are recomputed.
/// Adjacent speed spikes are merged into one span.
pub fn flag_anomalies(traj: &Trajectory3D, fps: f64, params: &AnomalyParams) -> Vec<Anomaly> {
    let mut out: Vec<Anomaly> = traj
        .flags()
        .iter()
        .filter(|a| matches!(a.kind, AnomalyKind::Gap | AnomalyKind::DegeneratePair))
        .cloned()
        .collect();

    let mut spike: Option<Anomaly> = None;
    for w in traj.samples().windows(2) {
        let dt = (w[1].frame - w[0].frame) as f64 / fps;
        let speed = w[0].distance(&w[1]) / dt;
        if speed > params.v_max_mps {
            match spike.as_mut() {
                Some(s) if s.end == w[0].frame => {
                    s.end = w[1].frame;
                    s.magnitude = s.magnitude.max(speed);
                }
                _ => {
                    out.extend(spike.take());
                    spike = Some(Anomaly {
                        kind: AnomalyKind::SpeedSpike,
                        start: w[0].frame,
                        end: w[1].frame,
                        magnitude: speed,
                    });
                }
            }
        }
    }
    out.extend(spike);

    let duration = traj.samples().len() as f64 / fps;
    if duration < params.min_duration_s {
        out.push(Anomaly {
            kind: AnomalyKind::ShortTrack,
            start: traj.first_frame(),
            end: traj.last_frame(),
            magnitude: duration,
        });
    }

    for seg in traj.segments() {
        if let Some(e) = seg.mean_reproj_px.filter(|e| *e > params.reproj_warn_px) {
            out.push(Anomaly {
                kind: AnomalyKind::HighReproj,
                start: seg.start,
                end: seg.end,
                magnitude: e,
            });
        }
    }

    out.sort_by_key(|a| (a.start, a.end, a.kind));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuse::{Provenance, Sample};

    fn walk(n: i64, fps: f64) -> Vec<Sample> {
        (0..n).map(|f| Sample::new(f, f as f64 / fps, 0.0)).collect()
    }

    #[test]
    fn steady_walk_is_clean() {
        let t = Trajectory3D::with_provenance("p", walk(600, 60.0), Provenance::Imported).unwrap();
        assert!(flag_anomalies(&t, 60.0, &AnomalyParams::default()).is_empty());
    }

    #[test]
    fn single_jump_is_one_spike() {
        let mut s = walk(600, 60.0);
        for p in &mut s[300..] {
            p.x += 2.0;
        }
        let t = Trajectory3D::with_provenance("p", s, Provenance::Imported).unwrap();
        let flags = flag_anomalies(&t, 60.0, &AnomalyParams::default());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].kind, AnomalyKind::SpeedSpike);
        assert_eq!((flags[0].start, flags[0].end), (299, 300));
        assert!((flags[0].magnitude - 121.0).abs() < 1e-6);
    }

    #[test]
    fn short_track_is_flagged() {
        let t = Trajectory3D::with_provenance("p", walk(30, 60.0), Provenance::Imported).unwrap();
        let flags = flag_anomalies(&t, 60.0, &AnomalyParams::default());
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].kind, AnomalyKind::ShortTrack);
    }
}

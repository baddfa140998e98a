use serde::{Deserialize, Serialize};

use super::FuseError;

/// Consecutive samples faster than this are a data error, not a tracking glitch.
pub const HARD_SPEED_CAP_MPS: f64 = 12.0;

/// One labeled position on the ground frame `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub frame: i64,
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub const fn new(frame: i64, x: f64, y: f64) -> Self {
        Self { frame, x, y }
    }

    pub fn distance(&self, other: &Sample) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Where the samples of a segment came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Plane-constrained triangulation from two cameras.
    Pair { cameras: [String; 2] },
    /// Ray/plane intersection from one camera.
    SingleView { camera: String },
    Interpolated,
    Manual,
    Imported,
    Cart,
}

impl Provenance {
    pub fn is_two_view(&self) -> bool {
        matches!(self, Provenance::Pair { .. })
    }
}

/// A contiguous frame range (inclusive) sharing one provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: i64,
    pub end: i64,
    pub provenance: Provenance,
    /// Mean reprojection error over the segment, when it was measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_reproj_px: Option<f64>,
}

impl Segment {
    pub fn contains(&self, frame: i64) -> bool {
        self.start <= frame && frame <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    SpeedSpike,
    Gap,
    ShortTrack,
    HighReproj,
    DegeneratePair,
}

/// A machine-flagged span for human review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    pub start: i64,
    pub end: i64,
    /// Speed in m/s, duration in s, or error in px depending on `kind`.
    pub magnitude: f64,
}

/// A fused pedestrian (or cart) trajectory in metric ground coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory3D {
    id: String,
    samples: Vec<Sample>,
    segments: Vec<Segment>,
    #[serde(default)]
    flags: Vec<Anomaly>,
    #[serde(default)]
    verified: bool,
    /// Number of human corrections that touched this trajectory.
    #[serde(default)]
    corrections: u32,
}

impl Trajectory3D {
    /// Builds a trajectory, checking that frames strictly increase, values are
    /// finite and every sample is covered by a segment.
    pub fn new(id: impl Into<String>, samples: Vec<Sample>, segments: Vec<Segment>) -> Result<Self, FuseError> {
        let t = Self {
            id: id.into(),
            samples,
            segments,
            flags: Vec::new(),
            verified: false,
            corrections: 0,
        };
        t.validate()?;
        Ok(t)
    }

    /// A trajectory whose samples all share one provenance.
    pub fn with_provenance(
        id: impl Into<String>,
        samples: Vec<Sample>,
        provenance: Provenance,
    ) -> Result<Self, FuseError> {
        let segments = match (samples.first(), samples.last()) {
            (Some(first), Some(last)) => vec![Segment {
                start: first.frame,
                end: last.frame,
                provenance,
                mean_reproj_px: None,
            }],
            _ => Vec::new(),
        };
        Self::new(id, samples, segments)
    }

    pub fn validate(&self) -> Result<(), FuseError> {
        let bad = |msg: String| FuseError::InvalidTrajectory {
            id: self.id.clone(),
            reason: msg,
        };
        if self.id.is_empty() {
            return Err(bad("empty id".into()));
        }
        if self.samples.is_empty() {
            return Err(bad("no samples".into()));
        }
        if let Some(w) = self.samples.windows(2).find(|w| w[1].frame <= w[0].frame) {
            return Err(bad(format!("frames not strictly increasing at {}", w[1].frame)));
        }
        if let Some(s) = self.samples.iter().find(|s| !(s.x.is_finite() && s.y.is_finite())) {
            return Err(bad(format!("non-finite coordinate at frame {}", s.frame)));
        }
        if let Some(s) = self
            .samples
            .iter()
            .find(|s| !self.segments.iter().any(|seg| seg.contains(s.frame)))
        {
            return Err(bad(format!("frame {} has no provenance", s.frame)));
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn flags(&self) -> &[Anomaly] {
        &self.flags
    }

    pub fn verified(&self) -> bool {
        self.verified
    }

    pub fn corrections(&self) -> u32 {
        self.corrections
    }

    pub fn first_frame(&self) -> i64 {
        self.samples[0].frame
    }

    pub fn last_frame(&self) -> i64 {
        self.samples[self.samples.len() - 1].frame
    }

    pub fn sample_at(&self, frame: i64) -> Option<&Sample> {
        self.samples
            .binary_search_by_key(&frame, |s| s.frame)
            .ok()
            .map(|i| &self.samples[i])
    }

    pub fn provenance_at(&self, frame: i64) -> Option<&Provenance> {
        self.segments.iter().find(|s| s.contains(frame)).map(|s| &s.provenance)
    }

    /// Whether any sample came from automatic fusion rather than a human.
    pub fn has_automatic_samples(&self) -> bool {
        self.samples.iter().any(|s| {
            !matches!(self.provenance_at(s.frame), Some(Provenance::Manual) | None)
        })
    }

    pub fn set_flags(&mut self, flags: Vec<Anomaly>) {
        self.flags = flags;
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub(crate) fn set_verified(&mut self, verified: bool) {
        self.verified = verified;
    }

    pub(crate) fn bump_corrections(&mut self) {
        self.corrections += 1;
    }

    pub(crate) fn into_parts(self) -> (String, Vec<Sample>, Vec<Segment>, Vec<Anomaly>, bool, u32) {
        (
            self.id,
            self.samples,
            self.segments,
            self.flags,
            self.verified,
            self.corrections,
        )
    }

    pub(crate) fn from_parts(
        id: String,
        samples: Vec<Sample>,
        segments: Vec<Segment>,
        flags: Vec<Anomaly>,
        verified: bool,
        corrections: u32,
    ) -> Self {
        Self {
            id,
            samples,
            segments,
            flags,
            verified,
            corrections,
        }
    }

    /// The subset of samples with `keep(frame)`, with segments and flags
    /// clipped to the surviving frame span. Returns `None` if nothing survives.
    pub(crate) fn restricted(&self, id: String, keep: impl Fn(i64) -> bool) -> Option<Self> {
        let samples: Vec<Sample> = self.samples.iter().copied().filter(|s| keep(s.frame)).collect();
        let (first, last) = (samples.first()?.frame, samples.last()?.frame);
        let segments = self
            .segments
            .iter()
            .filter(|s| s.end >= first && s.start <= last)
            .map(|s| Segment {
                start: s.start.max(first),
                end: s.end.min(last),
                ..s.clone()
            })
            .collect();
        let flags = self
            .flags
            .iter()
            .filter(|f| f.end >= first && f.start <= last)
            .map(|f| Anomaly {
                start: f.start.max(first),
                end: f.end.min(last),
                ..f.clone()
            })
            .collect();
        Some(Self {
            id,
            samples,
            segments,
            flags,
            verified: self.verified,
            corrections: self.corrections,
        })
    }

    /// Replaces the provenance of `start..=end` with `provenance`, splitting
    /// any segment that overlaps the range.
    pub(crate) fn override_provenance(segments: &mut Vec<Segment>, start: i64, end: i64, provenance: Provenance) {
        let mut out = Vec::with_capacity(segments.len() + 2);
        for s in segments.drain(..) {
            if s.end < start || s.start > end {
                out.push(s);
                continue;
            }
            if s.start < start {
                out.push(Segment {
                    end: start - 1,
                    ..s.clone()
                });
            }
            if s.end > end {
                out.push(Segment {
                    start: end + 1,
                    ..s.clone()
                });
            }
        }
        out.push(Segment {
            start,
            end,
            provenance,
            mean_reproj_px: None,
        });
        out.sort_by_key(|s| (s.start, s.end));
        *segments = out;
    }

    /// Rejects consecutive samples moving faster than [`HARD_SPEED_CAP_MPS`].
    pub fn check_speed_cap(&self, frame_rate: f64) -> Result<(), FuseError> {
        for w in self.samples.windows(2) {
            let dt = (w[1].frame - w[0].frame) as f64 / frame_rate;
            let speed = w[0].distance(&w[1]) / dt;
            if speed > HARD_SPEED_CAP_MPS {
                return Err(FuseError::SpeedCap {
                    id: self.id.clone(),
                    frame: w[1].frame,
                    speed,
                });
            }
        }
        Ok(())
    }
}

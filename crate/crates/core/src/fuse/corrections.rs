use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trajectory::{Provenance, Sample, Trajectory3D};
use super::FuseError;

/// One human edit to the fused trajectory set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    #[serde(flatten)]
    pub op: CorrectionOp,
    #[serde(default)]
    pub author: String,
    /// ISO-8601 time the edit was made.
    #[serde(default)]
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectionOp {
    /// Append `b` to `a`; the frame sets must be disjoint.
    Merge { a: String, b: String },
    /// Frames from `frame` onward move to `{id}_b`.
    Split { id: String, frame: i64 },
    Relabel { old: String, new: String },
    /// Remove `from..=to`; a hole in the middle splits off `{id}_b`.
    Delete { id: String, from: i64, to: i64 },
    MarkVerified { id: String },
    /// Import a hand-labeled trajectory, merging into `id` if it exists.
    AddManual { id: String, samples: Vec<Sample> },
}

impl Correction {
    pub fn new(op: CorrectionOp, author: impl Into<String>, timestamp: impl Into<String>) -> Self {
        Self {
            op,
            author: author.into(),
            timestamp: timestamp.into(),
        }
    }
}

/// A correction list stopped at `index`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("correction #{index} failed: {error}")]
pub struct CorrectionFailure {
    pub index: usize,
    pub error: FuseError,
}

/// Replays `corrections` in order. The output is sorted by id, so the same
/// input and list always give the same result.
pub fn apply_corrections(
    trajectories: Vec<Trajectory3D>,
    corrections: &[Correction],
) -> Result<Vec<Trajectory3D>, CorrectionFailure> {
    let mut set = trajectories;
    set.sort_by(|a, b| a.id().cmp(b.id()));
    for (index, c) in corrections.iter().enumerate() {
        apply_correction(&mut set, c).map_err(|error| CorrectionFailure { index, error })?;
    }
    Ok(set)
}

/// Applies one correction. On error `set` is left unchanged.
pub fn apply_correction(set: &mut Vec<Trajectory3D>, correction: &Correction) -> Result<(), FuseError> {
    match &correction.op {
        CorrectionOp::Merge { a, b } => {
            let ia = position(set, a)?;
            let ib = position(set, b)?;
            let merged = merge(&set[ia], &set[ib])?;
            set[ia] = merged;
            if ia != ib {
                set.remove(ib);
            }
        }
        CorrectionOp::Split { id, frame } => {
            let i = position(set, id)?;
            let t = &set[i];
            if *frame <= t.first_frame() || *frame > t.last_frame() {
                return Err(FuseError::FrameOutOfRange {
                    id: id.clone(),
                    frame: *frame,
                });
            }
            let new_id = format!("{id}_b");
            ensure_free(set, &new_id)?;
            let head = t.restricted(id.clone(), |f| f < *frame).expect("frame > first");
            let tail = t.restricted(new_id, |f| f >= *frame).expect("frame <= last");
            set[i] = touched(head);
            set.push(touched(tail));
        }
        CorrectionOp::Relabel { old, new } => {
            validate_id(new)?;
            let i = position(set, old)?;
            if old != new {
                ensure_free(set, new)?;
            }
            let mut t = set[i].clone();
            t.set_id(new.clone());
            set[i] = touched(t);
        }
        CorrectionOp::Delete { id, from, to } => {
            let i = position(set, id)?;
            let t = &set[i];
            let hits = t.samples().iter().any(|s| s.frame >= *from && s.frame <= *to);
            if from > to || !hits {
                return Err(FuseError::FrameOutOfRange {
                    id: id.clone(),
                    frame: *from,
                });
            }
            let before = t.restricted(id.clone(), |f| f < *from);
            let after_id = if before.is_some() { format!("{id}_b") } else { id.clone() };
            let after = t.restricted(after_id.clone(), |f| f > *to);
            if before.is_some() && after.is_some() {
                ensure_free(set, &after_id)?;
            }
            set.remove(i);
            set.extend(before.into_iter().chain(after).map(touched));
        }
        CorrectionOp::MarkVerified { id } => {
            let i = position(set, id)?;
            set[i].set_verified(true);
        }
        CorrectionOp::AddManual { id, samples } => {
            validate_id(id)?;
            let manual = Trajectory3D::with_provenance(id.clone(), samples.clone(), Provenance::Manual)?;
            match position(set, id) {
                Ok(i) => {
                    let merged = merge(&set[i], &manual)?;
                    set[i] = merged;
                }
                Err(_) => set.push(touched(manual)),
            }
        }
    }
    set.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(())
}

fn position(set: &[Trajectory3D], id: &str) -> Result<usize, FuseError> {
    set.iter()
        .position(|t| t.id() == id)
        .ok_or_else(|| FuseError::UnknownId(id.to_string()))
}

fn ensure_free(set: &[Trajectory3D], id: &str) -> Result<(), FuseError> {
    if set.iter().any(|t| t.id() == id) {
        Err(FuseError::IdConflict(id.to_string()))
    } else {
        Ok(())
    }
}

fn validate_id(id: &str) -> Result<(), FuseError> {
    if id.is_empty() || id.contains([',', '\n', '\r', '#']) || id.trim() != id {
        return Err(FuseError::InvalidTrajectory {
            id: id.to_string(),
            reason: "ids must be non-empty without commas, '#', line breaks or surrounding spaces".into(),
        });
    }
    Ok(())
}

fn touched(t: Trajectory3D) -> Trajectory3D {
    let mut t = t;
    t.set_verified(false);
    t.bump_corrections();
    t
}

fn merge(a: &Trajectory3D, b: &Trajectory3D) -> Result<Trajectory3D, FuseError> {
    if let Some(s) = a.samples().iter().find(|s| b.sample_at(s.frame).is_some()) {
        return Err(FuseError::OverlappingMerge {
            a: a.id().to_string(),
            b: b.id().to_string(),
            frame: s.frame,
        });
    }
    let (id, mut samples, mut segments, mut flags, _, ca) = a.clone().into_parts();
    let (_, bs, bseg, bflags, _, cb) = b.clone().into_parts();
    samples.extend(bs);
    samples.sort_by_key(|s| s.frame);
    segments.extend(bseg);
    segments.sort_by_key(|s| (s.start, s.end));
    flags.extend(bflags);
    flags.sort_by_key(|x| (x.start, x.end, x.kind));
    Ok(Trajectory3D::from_parts(id, samples, segments, flags, false, ca + cb + 1))
}

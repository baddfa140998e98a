//! Frame-level time alignment of cameras from a shared light-flash event.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("no sync event found in camera {camera}")]
    NoEventFound { camera: String },
    #[error("ambiguous sync event in camera {camera}: frames {first} and {second} have similar steps")]
    AmbiguousEvent {
        camera: String,
        first: i64,
        second: i64,
    },
    #[error("camera {0} missing from sync events")]
    MissingCamera(String),
    #[error("invalid luminance series: {0}")]
    InvalidSeries(String),
    #[error("invalid sync parameters: {0}")]
    InvalidParams(String),
}

/// Mean luminance of the flash region, one value per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceSeries {
    camera_id: String,
    samples: Vec<(i64, f64)>,
    fps: f64,
}

impl LuminanceSeries {
    pub fn new(camera_id: impl Into<String>, samples: Vec<(i64, f64)>, fps: f64) -> Result<Self, SyncError> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(SyncError::InvalidSeries(format!("fps must be positive, got {fps}")));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(SyncError::InvalidSeries(format!(
                "frame indices not strictly increasing at frame {}",
                w[1].0
            )));
        }
        if samples.iter().any(|(_, v)| !v.is_finite()) {
            return Err(SyncError::InvalidSeries("non-finite luminance".into()));
        }
        Ok(Self {
            camera_id: camera_id.into(),
            samples,
            fps,
        })
    }

    /// A series with frames numbered `0..values.len()`.
    pub fn from_values(camera_id: impl Into<String>, values: &[f64], fps: f64) -> Result<Self, SyncError> {
        Self::new(
            camera_id,
            values.iter().enumerate().map(|(i, v)| (i as i64, *v)).collect(),
            fps,
        )
    }

    pub fn camera_id(&self) -> &str {
        &self.camera_id
    }

    pub fn samples(&self) -> &[(i64, f64)] {
        &self.samples
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    /// Full width of the centered moving average; odd.
    pub smooth_window: usize,
    /// Threshold in multiples of the median absolute deviation of the
    /// first differences.
    pub mad_k: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            smooth_window: 3,
            mad_k: 8.0,
        }
    }
}

/// Two candidate events whose steps are within this relative margin are
/// indistinguishable.
const AMBIGUITY_MARGIN: f64 = 0.05;

/// Locates the switch-on of the flash: the largest positive first difference
/// of the smoothed luminance, provided it clears the MAD threshold.
///
/// Passing differences are grouped into contiguous runs; each run is one
/// candidate event, located at the magnitude-weighted centroid of the run so
/// that noise on the plateau a smoothed step leaves does not move it.
pub fn detect_sync_event(series: &LuminanceSeries, params: &DetectParams) -> Result<i64, SyncError> {
    let w = params.smooth_window;
    if w == 0 || w.is_multiple_of(2) {
        return Err(SyncError::InvalidParams(format!(
            "smooth_window must be odd and positive, got {w}"
        )));
    }
    if !(params.mad_k >= 0.0) {
        return Err(SyncError::InvalidParams("mad_k must be non-negative".into()));
    }
    let values: Vec<f64> = series.samples.iter().map(|(_, v)| *v).collect();
    if values.len() < 2 * w + 2 {
        return Err(SyncError::InvalidSeries(format!(
            "need at least {} samples, got {}",
            2 * w + 2,
            values.len()
        )));
    }
    let half = w / 2;
    // Valid-mode centered average: smoothed[k] is centered on sample k + half.
    let smoothed: Vec<f64> = values.windows(w).map(|win| win.iter().sum::<f64>() / w as f64).collect();
    // diffs[k] is the step into sample k + half + 1.
    let diffs: Vec<f64> = smoothed.windows(2).map(|p| p[1] - p[0]).collect();

    let threshold = params.mad_k * median_absolute_deviation(&diffs);
    let passes = |d: f64| d > threshold && d > 0.0;

    let mut candidates: Vec<(usize, f64)> = Vec::new();
    let mut k = 0;
    while k < diffs.len() {
        if !passes(diffs[k]) {
            k += 1;
            continue;
        }
        let start = k;
        while k < diffs.len() && passes(diffs[k]) {
            k += 1;
        }
        let run = &diffs[start..k];
        let peak = run.iter().cloned().fold(f64::MIN, f64::max);
        let weight: f64 = run.iter().sum();
        let centroid = run.iter().enumerate().map(|(i, d)| i as f64 * d).sum::<f64>() / weight;
        candidates.push((start + centroid.round() as usize, peak));
    }

    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let Some(&(best, best_step)) = candidates.first() else {
        return Err(SyncError::NoEventFound {
            camera: series.camera_id.clone(),
        });
    };
    let frame_of = |diff_index: usize| series.samples[diff_index + half + 1].0;
    if let Some(&(second, second_step)) = candidates.get(1) {
        if second_step >= (1.0 - AMBIGUITY_MARGIN) * best_step {
            return Err(SyncError::AmbiguousEvent {
                camera: series.camera_id.clone(),
                first: frame_of(best.min(second)),
                second: frame_of(best.max(second)),
            });
        }
    }
    Ok(frame_of(best))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_absolute_deviation(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let m = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    median(&mut dev)
}

/// Integer frame offsets relative to a reference camera.
///
/// Global frames are the reference camera's local frames; camera `c` records
/// global frame `g` as local frame `g + offsets[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAlignment {
    pub reference_camera_id: String,
    pub offsets: BTreeMap<String, i64>,
    pub fps: f64,
}

impl TimeAlignment {
    /// Every camera already on the reference timeline.
    pub fn identity<I, S>(cameras: I, fps: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let offsets: BTreeMap<String, i64> = cameras.into_iter().map(|c| (c.into(), 0)).collect();
        let reference_camera_id = offsets.keys().next().cloned().unwrap_or_default();
        Self {
            reference_camera_id,
            offsets,
            fps,
        }
    }

    pub fn offset(&self, camera: &str) -> Option<i64> {
        self.offsets.get(camera).copied()
    }

    pub fn to_local(&self, camera: &str, global_frame: i64) -> Option<i64> {
        self.offset(camera).map(|o| global_frame + o)
    }

    pub fn to_global(&self, camera: &str, local_frame: i64) -> Option<i64> {
        self.offset(camera).map(|o| local_frame - o)
    }
}

/// Offsets from per-camera event frames: `offsets[c] = events[c] − events[reference]`.
pub fn align(events: &BTreeMap<String, i64>, reference: &str, fps: f64) -> Result<TimeAlignment, SyncError> {
    let base = *events
        .get(reference)
        .ok_or_else(|| SyncError::MissingCamera(reference.to_string()))?;
    Ok(TimeAlignment {
        reference_camera_id: reference.to_string(),
        offsets: events.iter().map(|(c, e)| (c.clone(), e - base)).collect(),
        fps,
    })
}

//! Dataset statistics of an exported label file.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::TrajectoryFile;
use crate::pipeline::ExportMeta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub pedestrians: usize,
    /// Sum of per-trajectory durations (samples / label frequency).
    pub total_time_s: f64,
    /// Time from the first to the last labeled frame of the session.
    pub span_s: f64,
    pub label_fps: f64,
    pub anomalies: BTreeMap<String, usize>,
    /// Fraction of automatically fused pedestrians needing no correction.
    pub auto_only_fraction: Option<f64>,
    /// Fraction with any automatically fused samples, corrected or not.
    pub auto_assisted_fraction: Option<f64>,
    pub verified_fraction: Option<f64>,
}

/// Computes statistics; the fractions need the export sidecar.
pub fn session_stats(file: &TrajectoryFile, meta: Option<&ExportMeta>) -> SessionStats {
    let n = file.trajectories.len();
    let total_time_s = file
        .trajectories
        .iter()
        .map(|t| t.samples().len() as f64 / file.fps)
        .fold(0.0, |a, b| a + b);
    let first = file.trajectories.iter().map(|t| t.first_frame()).min();
    let last = file.trajectories.iter().map(|t| t.last_frame()).max();
    let span_s = match (first, last) {
        (Some(a), Some(b)) => (b - a) as f64 / file.frame_rate() + 1.0 / file.fps,
        _ => 0.0,
    };
    let mut anomalies = BTreeMap::new();
    let (mut auto_only, mut assisted, mut verified) = (None, None, None);
    if let Some(meta) = meta {
        for t in &meta.trajectories {
            for (k, c) in &t.anomalies {
                *anomalies.entry(k.clone()).or_insert(0) += c;
            }
        }
        let frac = |pred: &dyn Fn(&crate::pipeline::TrajectoryMeta) -> bool| {
            if meta.trajectories.is_empty() {
                0.0
            } else {
                meta.trajectories.iter().filter(|t| pred(t)).count() as f64 / meta.trajectories.len() as f64
            }
        };
        auto_only = Some(frac(&|t| t.automatic && t.corrections == 0));
        assisted = Some(frac(&|t| t.automatic));
        verified = Some(frac(&|t| t.verified));
    }
    SessionStats {
        pedestrians: n,
        total_time_s,
        span_s,
        label_fps: file.fps,
        anomalies,
        auto_only_fraction: auto_only,
        auto_assisted_fraction: assisted,
        verified_fraction: verified,
    }
}

impl fmt::Display for SessionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
        writeln!(f, "pedestrians: {}", self.pedestrians)?;
        writeln!(f, "total_time_s: {:.3}", self.total_time_s)?;
        writeln!(f, "span_s: {:.3}", self.span_s)?;
        writeln!(f, "label_fps: {}", self.label_fps)?;
        let total: usize = self.anomalies.values().sum();
        write!(f, "anomalies: {total}")?;
        for (k, c) in &self.anomalies {
            write!(f, " {k}={c}")?;
        }
        writeln!(f)?;
        writeln!(f, "auto_only: {}", pct(self.auto_only_fraction))?;
        writeln!(f, "auto_assisted: {}", pct(self.auto_assisted_fraction))?;
        writeln!(f, "verified: {}", pct(self.verified_fraction))
    }
}

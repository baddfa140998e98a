use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{json_error, read_file, write_file, IngestError};

/// Binds together the input files of one recording session.
///
/// Paths are stored as written in the file and resolved against the
/// manifest's directory by [`SessionManifest::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub session: String,
    pub calibration: PathBuf,
    /// Camera id to track CSV.
    pub tracks: BTreeMap<String, PathBuf>,
    /// Camera id to luminance CSV. Without any, cameras are assumed aligned.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub luminance: BTreeMap<String, PathBuf>,
    pub ground_points: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cart_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cart_tag_height_m: Option<f64>,
    pub native_fps: f64,
    pub output_fps: f64,
    /// Camera whose frames define the global timeline; defaults to the first id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_camera: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl SessionManifest {
    /// Parses and checks the manifest without touching the filesystem.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, IngestError> {
        let mut m: SessionManifest = serde_json::from_str(text).map_err(json_error)?;
        m.base_dir = base_dir.to_path_buf();
        m.validate()?;
        Ok(m)
    }

    /// Reads the manifest and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let base = path.parent().unwrap_or(Path::new(""));
        let m = Self::parse(&read_file(path)?, base).map_err(|e| e.in_file(path))?;
        for p in m.referenced_files() {
            if !p.is_file() {
                return Err(IngestError::MissingFile(p));
            }
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), IngestError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(path, &(text + "\n"))
    }

    fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Manifest(m));
        if !(self.output_fps.is_finite() && self.output_fps > 0.0) {
            return bad(format!("output_fps must be positive, got {}", self.output_fps));
        }
        if !(self.native_fps.is_finite() && self.native_fps >= self.output_fps) {
            return bad(format!(
                "native_fps ({}) must be at least output_fps ({})",
                self.native_fps, self.output_fps
            ));
        }
        if self.tracks.is_empty() {
            return bad("no track files listed".into());
        }
        if let Some(cam) = self.luminance.keys().find(|c| !self.tracks.contains_key(*c)) {
            return bad(format!("luminance file for camera {cam} without tracks"));
        }
        if !self.luminance.is_empty() && self.luminance.len() != self.tracks.len() {
            return bad("luminance must be given for every camera or for none".into());
        }
        if let Some(h) = self.cart_tag_height_m {
            if !(h.is_finite() && h >= 0.0) {
                return bad(format!("cart_tag_height_m must be non-negative, got {h}"));
            }
        }
        if let Some(r) = &self.reference_camera {
            if !self.tracks.contains_key(r) {
                return bad(format!("reference camera {r} has no tracks"));
            }
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn reference(&self) -> &str {
        match &self.reference_camera {
            Some(r) => r,
            None => self.tracks.keys().next().expect("validated non-empty"),
        }
    }

    /// Camera ids with tracks, sorted.
    pub fn camera_ids(&self) -> impl Iterator<Item = &str> {
        self.tracks.keys().map(String::as_str)
    }

    /// Every input path, resolved.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out = vec![self.resolve(&self.calibration), self.resolve(&self.ground_points)];
        out.extend(self.tracks.values().map(|p| self.resolve(p)));
        out.extend(self.luminance.values().map(|p| self.resolve(p)));
        out.extend(self.cart_labels.iter().map(|p| self.resolve(p)));
        out
    }
}

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{json_error, read_file, write_file, IngestError};
use crate::geom::{CameraModel, GeomError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    cameras: Vec<CameraEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraEntry {
    id: String,
    width: u32,
    height: u32,
    #[serde(rename = "P")]
    p: Vec<f64>,
}

/// Parses `{"cameras":[{"id","width","height","P":[12 row-major numbers]}]}`.
pub fn parse_calibration(text: &str) -> Result<Vec<CameraModel>, IngestError> {
    let file: CalibrationFile = serde_json::from_str(text).map_err(json_error)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(file.cameras.len());
    for entry in file.cameras {
        let invalid = |reason: String| IngestError::InvalidCamera {
            id: entry.id.clone(),
            reason,
        };
        if entry.id.is_empty() {
            return Err(invalid("empty camera id".into()));
        }
        if !seen.insert(entry.id.clone()) {
            return Err(invalid("duplicate camera id".into()));
        }
        if entry.width == 0 || entry.height == 0 {
            return Err(invalid("image size must be positive".into()));
        }
        let p: [f64; 12] = entry
            .p
            .as_slice()
            .try_into()
            .map_err(|_| invalid(format!("P must have 12 entries, found {}", entry.p.len())))?;
        let cam = CameraModel::from_row_major(entry.id.clone(), &p, entry.width, entry.height).map_err(|e| match e {
            GeomError::InvalidCamera { reason, .. } => invalid(reason),
            other => invalid(other.to_string()),
        })?;
        out.push(cam);
    }
    Ok(out)
}

pub fn load_calibration(path: &Path) -> Result<Vec<CameraModel>, IngestError> {
    parse_calibration(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_calibration(path: &Path, cameras: &[CameraModel]) -> Result<(), IngestError> {
    let file = CalibrationFile {
        cameras: cameras
            .iter()
            .map(|c| CameraEntry {
                id: c.id().to_string(),
                width: c.width(),
                height: c.height(),
                p: c.row_major().to_vec(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("calibration serializes");
    write_file(path, &(text + "\n"))
}

use std::fmt::Write as _;
use std::path::Path;

use super::{field_f64, field_i64, read_csv, read_file, write_file, IngestError};
use crate::cart::{CartLabel, LabelSource};
use crate::geom::{PixelPoint, WorldPoint};
use crate::sync::LuminanceSeries;

/// Parses ground sample points, header `x,y,z`, in meters.
pub fn parse_ground_points(text: &str) -> Result<Vec<WorldPoint>, IngestError> {
    let mut out = Vec::new();
    read_csv(text, &["x", "y", "z"], |line, rec| {
        out.push(WorldPoint::new(
            field_f64(rec, 0, "x", line)?,
            field_f64(rec, 1, "y", line)?,
            field_f64(rec, 2, "z", line)?,
        ));
        Ok(())
    })?;
    Ok(out)
}

pub fn load_ground_points(path: &Path) -> Result<Vec<WorldPoint>, IngestError> {
    parse_ground_points(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_ground_points(path: &Path, points: &[WorldPoint]) -> Result<(), IngestError> {
    let mut out = String::from("x,y,z\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
    }
    write_file(path, &out)
}

/// Parses `frame,luminance` rows; frames must strictly increase.
pub fn parse_luminance(text: &str, camera_id: &str, fps: f64) -> Result<LuminanceSeries, IngestError> {
    let mut samples: Vec<(i64, f64)> = Vec::new();
    read_csv(text, &["frame", "luminance"], |line, rec| {
        let frame = field_i64(rec, 0, "frame", line)?;
        if samples.last().is_some_and(|(f, _)| *f >= frame) {
            return Err(IngestError::parse(line, "frame", "frames must strictly increase"));
        }
        samples.push((frame, field_f64(rec, 1, "luminance", line)?));
        Ok(())
    })?;
    LuminanceSeries::new(camera_id, samples, fps).map_err(|e| IngestError::parse(0, "fps", e.to_string()))
}

pub fn load_luminance(path: &Path, camera_id: &str, fps: f64) -> Result<LuminanceSeries, IngestError> {
    parse_luminance(&read_file(path)?, camera_id, fps).map_err(|e| e.in_file(path))
}

pub fn write_luminance(path: &Path, series: &LuminanceSeries) -> Result<(), IngestError> {
    let mut out = String::from("frame,luminance\n");
    for (f, v) in series.samples() {
        let _ = writeln!(out, "{f},{v}");
    }
    write_file(path, &out)
}

/// Parses cart labels, header `camera_id,frame,x,y,source`, where `frame` is
/// the labeling camera's local frame and `source` is `manual` or `tag`.
pub fn parse_cart_labels(text: &str) -> Result<Vec<CartLabel>, IngestError> {
    let mut out = Vec::new();
    read_csv(text, &["camera_id", "frame", "x", "y", "source"], |line, rec| {
        let camera_id = rec[0].to_string();
        if camera_id.is_empty() {
            return Err(IngestError::parse(line, "camera_id", "empty camera id"));
        }
        let frame = field_i64(rec, 1, "frame", line)?;
        if frame < 0 {
            return Err(IngestError::parse(line, "frame", "negative frame"));
        }
        let pixel = PixelPoint::new(field_f64(rec, 2, "x", line)?, field_f64(rec, 3, "y", line)?);
        let source = match &rec[4] {
            "manual" => LabelSource::Manual,
            "tag" => LabelSource::Tag,
            other => {
                return Err(IngestError::parse(
                    line,
                    "source",
                    format!("expected `manual` or `tag`, found `{other}`"),
                ))
            }
        };
        out.push(CartLabel {
            camera_id,
            frame,
            pixel,
            source,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_cart_labels(path: &Path) -> Result<Vec<CartLabel>, IngestError> {
    parse_cart_labels(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_cart_labels(path: &Path, labels: &[CartLabel]) -> Result<(), IngestError> {
    let mut out = String::from("camera_id,frame,x,y,source\n");
    for l in labels {
        let source = match l.source {
            LabelSource::Manual => "manual",
            LabelSource::Tag => "tag",
        };
        let _ = writeln!(out, "{},{},{},{},{source}", l.camera_id, l.frame, l.pixel.x, l.pixel.y);
    }
    write_file(path, &out)
}

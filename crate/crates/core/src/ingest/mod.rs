//! On-disk formats: parsing, validation and writing.
//!
//! Every parser takes the file contents as `&str` and never touches the
//! filesystem; the `load_*` wrappers add the read and attach the path to
//! errors. Numeric fields are rejected when they are not finite.

mod calibration;
mod manifest;
mod tables;
mod tracks;
mod trajectories;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use calibration::{load_calibration, parse_calibration, write_calibration};
pub use manifest::SessionManifest;
pub use tables::{
    load_cart_labels, load_ground_points, load_luminance, parse_cart_labels, parse_ground_points, parse_luminance,
    write_cart_labels, write_ground_points, write_luminance,
};
pub use tracks::{load_tracks, parse_tracks, write_tracks, Track2D, TrackObservation, TrackSet, BOX_HEIGHT_PX, BOX_WIDTH_PX};
pub use trajectories::{
    load_corrections, load_trajectories, parse_corrections, parse_trajectories, write_corrections,
    write_trajectories, TrajectoryFile,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, field {field}: {message}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },
    #[error("invalid camera {id}: {reason}")]
    InvalidCamera { id: String, reason: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("missing input file {0}")]
    MissingFile(PathBuf),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } | IngestError::MissingFile(_) => "IO",
            IngestError::Parse { .. } => "ParseError",
            IngestError::InvalidCamera { .. } => "InvalidCamera",
            IngestError::Manifest(_) => "Manifest",
        }
    }

    /// Prefixes the path to a parse error so messages point at the file.
    fn in_file(self, path: &Path) -> Self {
        match self {
            IngestError::Parse { line, field, message } => IngestError::Parse {
                line,
                field,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        }
    }

    pub(crate) fn parse(line: u64, field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Non-fatal findings while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestWarning {
    EmptyFile,
    /// A later row replaced an earlier one for the same track and frame.
    DuplicateObservation { line: u64, track_id: u64, frame: i64 },
}

impl std::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IngestWarning::EmptyFile => write!(f, "file has no data rows"),
            IngestWarning::DuplicateObservation { line, track_id, frame } => {
                write!(f, "line {line}: duplicate frame {frame} for track {track_id}, keeping the later row")
            }
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::MissingFile(path.to_path_buf())
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<(), IngestError> {
    write_file(path, contents)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), IngestError> {
    let io = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

pub(crate) fn json_error(e: serde_json::Error) -> IngestError {
    IngestError::parse(e.line() as u64, "json", e.to_string())
}

/// Reads headed CSV rows, checking the header and handing each record to `row`
/// with its 1-based line number. Lines starting with `#` are comments.
pub(crate) fn read_csv<F>(text: &str, header: &[&str], mut row: F) -> Result<usize, IngestError>
where
    F: FnMut(u64, &csv::StringRecord) -> Result<(), IngestError>,
{
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        IngestError::parse(line, "csv", e.to_string())
    };
    let found = rdr.headers().map_err(csv_err)?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Ok(0);
    }
    if found.iter().ne(header.iter().copied()) {
        return Err(IngestError::parse(
            1,
            "header",
            format!("expected `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut n = 0;
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(true) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                row(line, &rec)?;
                n += 1;
            }
            Ok(false) => return Ok(n),
            Err(e) => return Err(csv_err(e)),
        }
    }
}

pub(crate) fn field_f64(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64, IngestError> {
    let raw = &rec[idx];
    let v: f64 = raw
        .parse()
        .map_err(|_| IngestError::parse(line, name, format!("not a number: `{raw}`")))?;
    if !v.is_finite() {
        return Err(IngestError::parse(line, name, format!("not finite: `{raw}`")));
    }
    Ok(v)
}

pub(crate) fn field_i64(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<i64, IngestError> {
    let raw = &rec[idx];
    raw.parse()
        .map_err(|_| IngestError::parse(line, name, format!("not an integer: `{raw}`")))
}

pub(crate) fn field_u64(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<u64, IngestError> {
    let raw = &rec[idx];
    raw.parse()
        .map_err(|_| IngestError::parse(line, name, format!("not a non-negative integer: `{raw}`")))
}

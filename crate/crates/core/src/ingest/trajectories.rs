use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{field_f64, field_i64, json_error, read_csv, read_file, write_file, IngestError};
use crate::fuse::{Correction, Provenance, Sample, Trajectory3D};

const HEADER: [&str; 4] = ["frame", "id", "x", "y"];

/// An exported label file: ETH/UCY-style rows plus a small comment header.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub session: String,
    /// Label frequency of the rows.
    pub fps: f64,
    /// Frame rate the frame numbers count in, when different from `fps`.
    pub native_fps: Option<f64>,
    pub trajectories: Vec<Trajectory3D>,
}

impl TrajectoryFile {
    /// Frame rate of the frame column: `native_fps` if present, else `fps`.
    pub fn frame_rate(&self) -> f64 {
        self.native_fps.unwrap_or(self.fps)
    }

    /// Renders the file. Rows are sorted by (frame, id) with six decimals.
    pub fn render(&self) -> Result<String, IngestError> {
        let mut rows: Vec<(i64, &str, f64, f64)> = Vec::new();
        for t in &self.trajectories {
            if t.id().is_empty() || t.id().contains([',', '\n', '\r', '"']) || t.id().starts_with('#') {
                return Err(IngestError::parse(0, "id", format!("id `{}` cannot be written as a CSV field", t.id())));
            }
            rows.extend(t.samples().iter().map(|s| (s.frame, t.id(), s.x, s.y)));
        }
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = format!("# fps={}\n", self.fps);
        if let Some(native) = self.native_fps {
            let _ = writeln!(out, "# frame_rate={native}");
        }
        if self.session.contains(['\n', '\r']) {
            return Err(IngestError::parse(0, "session", "session id contains a line break"));
        }
        let _ = writeln!(out, "# session={}", self.session);
        out.push_str(&HEADER.join(","));
        out.push('\n');
        for (frame, id, x, y) in rows {
            let _ = writeln!(out, "{frame},{id},{x:.6},{y:.6}");
        }
        Ok(out)
    }
}

/// Parses a label file. Every trajectory comes back with `imported` provenance.
pub fn parse_trajectories(text: &str) -> Result<TrajectoryFile, IngestError> {
    let mut fps = None;
    let mut native_fps = None;
    let mut session = String::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            break;
        };
        let Some((key, value)) = comment.split_once('=') else {
            continue;
        };
        let number = |field: &str| -> Result<f64, IngestError> {
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| IngestError::parse(line_no, field, format!("not a number: `{}`", value.trim())))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(IngestError::parse(line_no, field, "must be positive and finite"));
            }
            Ok(v)
        };
        match key.trim() {
            "fps" => fps = Some(number("fps")?),
            "frame_rate" => native_fps = Some(number("frame_rate")?),
            "session" => session = value.trim().to_string(),
            _ => {}
        }
    }
    let fps = fps.ok_or_else(|| IngestError::parse(1, "fps", "missing `# fps=` header line"))?;

    let mut by_id: BTreeMap<String, Vec<Sample>> = BTreeMap::new();
    let mut lines: BTreeMap<(String, i64), u64> = BTreeMap::new();
    read_csv(text, &HEADER, |line, rec| {
        let frame = field_i64(rec, 0, "frame", line)?;
        let id = rec[1].to_string();
        if id.is_empty() {
            return Err(IngestError::parse(line, "id", "empty id"));
        }
        let x = field_f64(rec, 2, "x", line)?;
        let y = field_f64(rec, 3, "y", line)?;
        if let Some(prev) = lines.insert((id.clone(), frame), line) {
            return Err(IngestError::parse(
                line,
                "frame",
                format!("id {id} already has frame {frame} on line {prev}"),
            ));
        }
        by_id.entry(id).or_default().push(Sample::new(frame, x, y));
        Ok(())
    })?;
    let mut trajectories = Vec::with_capacity(by_id.len());
    for (id, mut samples) in by_id {
        samples.sort_by_key(|s| s.frame);
        let t = Trajectory3D::with_provenance(id.clone(), samples, Provenance::Imported)
            .map_err(|e| IngestError::parse(0, "id", e.to_string()))?;
        trajectories.push(t);
    }
    Ok(TrajectoryFile {
        session,
        fps,
        native_fps,
        trajectories,
    })
}

pub fn load_trajectories(path: &Path) -> Result<TrajectoryFile, IngestError> {
    parse_trajectories(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_trajectories(path: &Path, file: &TrajectoryFile) -> Result<(), IngestError> {
    write_file(path, &file.render()?)
}

/// Parses an ordered JSON list of corrections.
pub fn parse_corrections(text: &str) -> Result<Vec<Correction>, IngestError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str(text).map_err(json_error)
}

pub fn load_corrections(path: &Path) -> Result<Vec<Correction>, IngestError> {
    parse_corrections(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_corrections(path: &Path, corrections: &[Correction]) -> Result<(), IngestError> {
    let text = serde_json::to_string_pretty(corrections).expect("corrections serialize");
    write_file(path, &(text + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(trajectories: Vec<Trajectory3D>) -> TrajectoryFile {
        TrajectoryFile {
            session: "s1".into(),
            fps: 60.0,
            native_fps: None,
            trajectories,
        }
    }

    #[test]
    fn two_rows() {
        let t = Trajectory3D::with_provenance(
            "p1",
            vec![Sample::new(0, 0.0, 0.0), Sample::new(1, 1.0, 0.0)],
            Provenance::Pair {
                cameras: ["a".into(), "b".into()],
            },
        )
        .unwrap();
        let text = file(vec![t]).render().unwrap();
        assert_eq!(
            text,
            "# fps=60\n# session=s1\nframe,id,x,y\n0,p1,0.000000,0.000000\n1,p1,1.000000,0.000000\n"
        );
        let back = parse_trajectories(&text).unwrap();
        assert_eq!(back.fps, 60.0);
        assert_eq!(back.session, "s1");
        assert_eq!(back.trajectories[0].samples().len(), 2);
    }

    #[test]
    fn empty_set_is_header_only() {
        let text = file(Vec::new()).render().unwrap();
        assert_eq!(text, "# fps=60\n# session=s1\nframe,id,x,y\n");
        assert!(parse_trajectories(&text).unwrap().trajectories.is_empty());
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_trajectories("frame,id,x,y\n").is_err());
        let dup = "# fps=60\nframe,id,x,y\n0,a,0,0\n0,a,1,1\n";
        assert!(matches!(parse_trajectories(dup), Err(IngestError::Parse { line: 4, .. })));
        let nan = "# fps=60\nframe,id,x,y\n0,a,0,NaN\n";
        assert!(matches!(parse_trajectories(nan), Err(IngestError::Parse { line: 3, .. })));
    }
}

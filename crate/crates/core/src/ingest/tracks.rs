use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{field_f64, field_i64, field_u64, read_csv, read_file, write_file, IngestError, IngestWarning};
use crate::geom::PixelPoint;

/// Box size used when writing tracks that only carry a foot point.
pub const BOX_WIDTH_PX: f64 = 40.0;
pub const BOX_HEIGHT_PX: f64 = 100.0;

const HEADER: [&str; 6] = ["frame", "track_id", "x", "y", "w", "h"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackObservation {
    /// Camera-local frame index.
    pub frame: i64,
    /// Bottom-center of the bounding box.
    pub point: PixelPoint,
}

/// One tracker output: a single track id in a single camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track2D {
    pub camera_id: String,
    pub track_id: u64,
    /// Strictly increasing frames.
    pub observations: Vec<TrackObservation>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    /// Sorted by track id.
    pub tracks: Vec<Track2D>,
    pub warnings: Vec<IngestWarning>,
}

/// Parses MOT-style rows `frame,track_id,x,y,w,h` where `(x, y)` is the
/// top-left corner. Each box becomes its bottom-center point, which must lie
/// within the image grown by 10% on every side.
pub fn parse_tracks(text: &str, camera_id: &str, width: u32, height: u32) -> Result<TrackSet, IngestError> {
    let (w_img, h_img) = (f64::from(width), f64::from(height));
    let mut by_track: BTreeMap<u64, BTreeMap<i64, PixelPoint>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let rows = read_csv(text, &HEADER, |line, rec| {
        let frame = field_i64(rec, 0, "frame", line)?;
        let track_id = field_u64(rec, 1, "track_id", line)?;
        let x = field_f64(rec, 2, "x", line)?;
        let y = field_f64(rec, 3, "y", line)?;
        let w = field_f64(rec, 4, "w", line)?;
        let h = field_f64(rec, 5, "h", line)?;
        if w < 0.0 {
            return Err(IngestError::parse(line, "w", "negative box width"));
        }
        if h < 0.0 {
            return Err(IngestError::parse(line, "h", "negative box height"));
        }
        let p = PixelPoint::new(x + w / 2.0, y + h);
        if p.x < -0.1 * w_img || p.x > 1.1 * w_img {
            return Err(IngestError::parse(line, "x", format!("foot point x={} outside the image", p.x)));
        }
        if p.y < -0.1 * h_img || p.y > 1.1 * h_img {
            return Err(IngestError::parse(line, "y", format!("foot point y={} outside the image", p.y)));
        }
        if by_track.entry(track_id).or_default().insert(frame, p).is_some() {
            warnings.push(IngestWarning::DuplicateObservation { line, track_id, frame });
        }
        Ok(())
    })?;
    if rows == 0 {
        warnings.push(IngestWarning::EmptyFile);
    }
    let tracks = by_track
        .into_iter()
        .map(|(track_id, obs)| Track2D {
            camera_id: camera_id.to_string(),
            track_id,
            observations: obs
                .into_iter()
                .map(|(frame, point)| TrackObservation { frame, point })
                .collect(),
        })
        .collect();
    Ok(TrackSet { tracks, warnings })
}

pub fn load_tracks(path: &Path, camera_id: &str, width: u32, height: u32) -> Result<TrackSet, IngestError> {
    parse_tracks(&read_file(path)?, camera_id, width, height).map_err(|e| e.in_file(path))
}

/// Writes rows ordered by (frame, track id) with fixed-size boxes whose
/// bottom-center is each observation.
pub fn write_tracks(path: &Path, tracks: &[Track2D]) -> Result<(), IngestError> {
    let mut rows: Vec<(i64, u64, PixelPoint)> = tracks
        .iter()
        .flat_map(|t| t.observations.iter().map(move |o| (o.frame, t.track_id, o.point)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = HEADER.join(",");
    out.push('\n');
    for (frame, id, p) in rows {
        let _ = writeln!(
            out,
            "{frame},{id},{},{},{BOX_WIDTH_PX},{BOX_HEIGHT_PX}",
            p.x - BOX_WIDTH_PX / 2.0,
            p.y - BOX_HEIGHT_PX
        );
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_center() {
        let set = parse_tracks("frame,track_id,x,y,w,h\n1,7,100,200,50,120\n", "a", 1920, 1080).unwrap();
        assert_eq!(set.tracks.len(), 1);
        assert_eq!(set.tracks[0].track_id, 7);
        assert_eq!(set.tracks[0].observations[0].point, PixelPoint::new(125.0, 320.0));
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn duplicate_frame_last_wins() {
        let text = "frame,track_id,x,y,w,h\n1,7,100,200,50,120\n1,7,0,0,10,10\n";
        let set = parse_tracks(text, "a", 1920, 1080).unwrap();
        assert_eq!(set.tracks[0].observations.len(), 1);
        assert_eq!(set.tracks[0].observations[0].point, PixelPoint::new(5.0, 10.0));
        assert_eq!(
            set.warnings,
            vec![IngestWarning::DuplicateObservation {
                line: 3,
                track_id: 7,
                frame: 1
            }]
        );
    }

    #[test]
    fn empty_file_warns() {
        for text in ["", "frame,track_id,x,y,w,h\n"] {
            let set = parse_tracks(text, "a", 100, 100).unwrap();
            assert!(set.tracks.is_empty());
            assert_eq!(set.warnings, vec![IngestWarning::EmptyFile]);
        }
    }

    #[test]
    fn rejects_non_finite_and_out_of_bounds() {
        let nan = "frame,track_id,x,y,w,h\n1,7,100,200,50,120\n2,7,NaN,200,50,120\n";
        match parse_tracks(nan, "a", 1920, 1080) {
            Err(IngestError::Parse { line, field, .. }) => assert_eq!((line, field.as_str()), (3, "x")),
            other => panic!("{other:?}"),
        }
        let inf = "frame,track_id,x,y,w,h\n1,7,100,inf,50,120\n";
        assert!(matches!(parse_tracks(inf, "a", 1920, 1080), Err(IngestError::Parse { line: 2, .. })));
        let far = "frame,track_id,x,y,w,h\n1,7,5000,200,50,120\n";
        assert!(matches!(parse_tracks(far, "a", 1920, 1080), Err(IngestError::Parse { .. })));
        let bad_header = "frame,id,x,y,w,h\n";
        assert!(matches!(parse_tracks(bad_header, "a", 1920, 1080), Err(IngestError::Parse { line: 1, .. })));
    }
}

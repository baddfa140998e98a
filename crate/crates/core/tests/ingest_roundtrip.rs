mod common;

use common::{random_walk, rng, write_scene};
use rand::Rng;
use trajlab::ingest::{
    load_calibration, load_tracks, parse_calibration, parse_cart_labels, parse_corrections, parse_ground_points,
    parse_luminance, parse_tracks, parse_trajectories, write_trajectories, IngestError, SessionManifest,
    TrajectoryFile,
};
use trajlab::synth::{layout, SceneSpec};

#[test]
fn synth_calibration_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, manifest) = write_scene(&SceneSpec { pedestrians: 2, duration_s: 2.0, ..SceneSpec::default() }, dir.path());
    let m = SessionManifest::load(&manifest).unwrap();
    let cams = load_calibration(&m.resolve(&m.calibration)).unwrap();
    assert_eq!(cams.len(), 3);
    let ids: std::collections::BTreeSet<&str> = cams.iter().map(|c| c.id()).collect();
    assert_eq!(ids.len(), 3);
    for (a, b) in cams.iter().zip(&scene.cameras) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.row_major(), b.row_major());
        assert_eq!((a.width(), a.height()), (b.width(), b.height()));
    }
}

#[test]
fn synth_tracks_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, manifest) = write_scene(&SceneSpec { pedestrians: 20, duration_s: 5.0, ..SceneSpec::default() }, dir.path());
    let m = SessionManifest::load(&manifest).unwrap();
    for cam in &scene.cameras {
        let set = load_tracks(&m.resolve(&m.tracks[cam.id()]), cam.id(), cam.width(), cam.height()).unwrap();
        assert!(set.warnings.is_empty());
        assert_eq!(set.tracks.len(), 20);
        assert_eq!(set.tracks, scene.tracks[cam.id()]);
    }
    assert!(dir.path().join(layout::LEDGER).is_file());
}

#[test]
fn trajectory_files_are_stable_after_one_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trajectories = (0..100)
        .map(|k| random_walk(k, &format!("p{k}"), (k as i64 % 7) * 13, 20 + (k as usize % 50)))
        .collect();
    let file = TrajectoryFile {
        session: "roundtrip".into(),
        fps: 2.5,
        native_fps: Some(60.0),
        trajectories,
    };
    let first = dir.path().join("a.csv");
    write_trajectories(&first, &file).unwrap();
    let once = std::fs::read_to_string(&first).unwrap();
    let loaded = parse_trajectories(&once).unwrap();
    assert_eq!(loaded.trajectories.len(), 100);
    for b in &file.trajectories {
        let a = loaded.trajectories.iter().find(|t| t.id() == b.id()).unwrap();
        assert_eq!(a.samples().len(), b.samples().len());
        for (s, t) in a.samples().iter().zip(b.samples()) {
            assert_eq!(s.frame, t.frame);
            assert!((s.x - t.x).abs() <= 5e-7 && (s.y - t.y).abs() <= 5e-7);
        }
    }
    let second = dir.path().join("b.csv");
    write_trajectories(&second, &loaded).unwrap();
    assert_eq!(once, std::fs::read_to_string(&second).unwrap());
}

#[test]
fn empty_trajectory_set_is_header_only() {
    let file = TrajectoryFile {
        session: "s".into(),
        fps: 60.0,
        native_fps: None,
        trajectories: Vec::new(),
    };
    let text = file.render().unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l == "frame,id,x,y"), "{text}");
    assert!(parse_trajectories(&text).unwrap().trajectories.is_empty());
}

fn assert_parse_error_at(result: Result<impl std::fmt::Debug, IngestError>, line: u64) {
    match result {
        Err(IngestError::Parse { line: l, .. }) => assert_eq!(l, line),
        other => panic!("expected a parse error at line {line}, got {other:?}"),
    }
}

#[test]
fn non_finite_values_are_rejected_with_their_line() {
    for bad in ["NaN", "inf", "-inf", "Infinity"] {
        assert_parse_error_at(parse_tracks(&format!("frame,track_id,x,y,w,h\n1,1,10,10,5,5\n2,1,{bad},10,5,5\n"), "c", 100, 100), 3);
        assert_parse_error_at(parse_ground_points(&format!("x,y,z\n0,0,0\n1,{bad},0\n")), 3);
        assert_parse_error_at(parse_luminance(&format!("frame,luminance\n0,1\n1,{bad}\n"), "c", 60.0), 3);
        assert_parse_error_at(parse_cart_labels(&format!("camera_id,frame,x,y,source\nc,0,{bad},1,manual\n")), 2);
        assert_parse_error_at(parse_trajectories(&format!("# fps=60\nframe,id,x,y\n0,a,1,1\n1,a,1,{bad}\n")), 4);
        let calib = format!("{{\"cameras\":[\n{{\"id\":\"c\",\"width\":10,\"height\":10,\n\"P\":[1,0,0,0,0,1,0,0,0,0,{bad},10]}}]}}");
        assert!(matches!(parse_calibration(&calib), Err(IngestError::Parse { line: 3, .. })), "{bad}");
        let corr = format!("[\n{{\"kind\":\"add_manual\",\"id\":\"m\",\"samples\":[{{\"frame\":0,\"x\":{bad},\"y\":0}}]}}]");
        assert!(matches!(parse_corrections(&corr), Err(IngestError::Parse { line: 2, .. })), "{bad}");
    }
}

#[test]
fn random_track_rows_survive_parsing() {
    let mut rng = rng(3);
    let mut text = String::from("frame,track_id,x,y,w,h\n");
    let mut rows = Vec::new();
    for f in 0..200i64 {
        let id = rng.random_range(1..5u64);
        let (x, y, w, h) = (
            rng.random_range(0.0..1800.0),
            rng.random_range(0.0..900.0),
            rng.random_range(1.0..100.0),
            rng.random_range(1.0..150.0),
        );
        text.push_str(&format!("{f},{id},{x},{y},{w},{h}\n"));
        rows.push((f, id, x + w / 2.0, y + h));
    }
    let set = parse_tracks(&text, "c", 1920, 1080).unwrap();
    for (f, id, px, py) in rows {
        let t = set.tracks.iter().find(|t| t.track_id == id).unwrap();
        let o = t.observations.iter().find(|o| o.frame == f).unwrap();
        assert_eq!((o.point.x, o.point.y), (px, py));
    }
}

use std::path::Path;
use std::process::{Command, Output};

fn trajlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajlab"))
        .args(args)
        .env_remove("TRAJLAB_SEED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, spec: &str) -> String {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, spec).unwrap();
    let out = trajlab(&["synth", "--spec", spec_path.to_str().unwrap(), "--out", dir.join("s").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

const SMALL: &str = r#"{"seed": 3, "pedestrians": 5, "duration_s": 6.0, "cart": {}}"#;

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), SMALL);
    for verb in [&["fit-plane"][..], &["sync"], &["fuse", "--workers", "3"], &["cart"], &["export"]] {
        let mut args = verb.to_vec();
        args.push(&manifest);
        let out = trajlab(&args);
        assert!(out.status.success(), "{verb:?}: {}", stderr(&out));
    }
    let s = dir.path().join("s");
    for name in ["plane.json", "alignment.json", "fused.json", "cart.csv", "trajectories.csv", "trajectories.meta.json"] {
        assert!(s.join(name).is_file(), "{name}");
    }
    let out = trajlab(&["stats", s.join("trajectories.csv").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pedestrians: 5\n") && text.contains("label_fps: 2.5\n"), "{text}");
    assert!(text.contains("auto_only: 100.0%"), "{text}");
}

#[test]
fn missing_track_file_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), SMALL);
    assert!(trajlab(&["fit-plane", &manifest]).status.success());
    assert!(trajlab(&["sync", &manifest]).status.success());
    std::fs::remove_file(dir.path().join("s/tracks/cam2.csv")).unwrap();
    let out = trajlab(&["fuse", &manifest]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("E:IO:"), "{}", stderr(&out));
}

#[test]
fn non_integer_output_rate_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), SMALL);
    for verb in ["fit-plane", "sync", "fuse"] {
        assert!(trajlab(&[verb, &manifest]).status.success());
    }
    let out = trajlab(&["export", "--output-fps", "7", &manifest]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:NonIntegerRatio:"), "{}", stderr(&out));
}

#[test]
fn workdir_keeps_artifacts_apart() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), SMALL);
    let work = dir.path().join("work");
    let out = trajlab(&["fit-plane", &manifest, "--workdir", work.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(work.join("plane.json").is_file());
    assert!(!dir.path().join("s/plane.json").exists());
}

#[test]
fn empty_file_stats_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "# fps=60\nframe,id,x,y\n").unwrap();
    let out = trajlab(&["stats", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pedestrians: 0\n") && text.contains("total_time_s: 0.000\n"), "{text}");
}

#[test]
fn bad_seed_variable_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_trajlab"))
        .args(["fit-plane", &manifest])
        .env("TRAJLAB_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:Config:"), "{}", stderr(&out));
}

#[test]
fn unknown_spec_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"pedestrain": 3}"#).unwrap();
    let out = trajlab(&["synth", "--spec", spec.to_str().unwrap(), "--out", dir.path().join("s").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:"), "{}", stderr(&out));
}

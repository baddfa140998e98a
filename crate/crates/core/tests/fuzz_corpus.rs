//! Replays the checked-in fuzz seeds through the parsers on stable, with the
//! same properties the fuzz targets assert.

use std::path::{Path, PathBuf};

use trajlab::ingest::{
    parse_calibration, parse_cart_labels, parse_corrections, parse_ground_points, parse_luminance, parse_tracks,
    parse_trajectories, SessionManifest,
};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn calibration_seeds() {
    for (_, s) in seeds("calibration") {
        if let Ok(cams) = parse_calibration(&s) {
            assert!(cams.iter().all(|c| c.row_major().iter().all(|v| v.is_finite())));
        }
    }
}

#[test]
fn track_seeds() {
    for (_, s) in seeds("tracks") {
        if let Ok(set) = parse_tracks(&s, "c", 1920, 1080) {
            for t in set.tracks {
                assert!(t.observations.windows(2).all(|w| w[0].frame < w[1].frame));
            }
        }
    }
}

#[test]
fn table_seeds() {
    for (_, s) in seeds("ground_points") {
        let _ = parse_ground_points(&s);
    }
    for (_, s) in seeds("luminance") {
        let _ = parse_luminance(&s, "c", 60.0);
    }
    for (_, s) in seeds("cart_labels") {
        let _ = parse_cart_labels(&s);
    }
    for (_, s) in seeds("manifest") {
        let _ = SessionManifest::parse(&s, Path::new("/session"));
    }
}

#[test]
fn trajectory_seeds_render_stably() {
    for (p, s) in seeds("trajectories") {
        let file = parse_trajectories(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let once = file.render().unwrap();
        assert_eq!(parse_trajectories(&once).unwrap().render().unwrap(), once, "{}", p.display());
    }
}

#[test]
fn correction_seeds_round_trip() {
    for (p, s) in seeds("corrections") {
        let log = parse_corrections(&s).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let text = serde_json::to_string(&log).unwrap();
        assert_eq!(parse_corrections(&text).unwrap(), log);
    }
}

fn all_seeds() -> Vec<String> {
    ["calibration", "tracks", "ground_points", "luminance", "cart_labels", "trajectories", "corrections", "manifest"]
        .iter()
        .flat_map(|t| seeds(t).into_iter().map(|(_, s)| s))
        .collect()
}

fn mutate(seed: &str, at: usize, cut: usize, insert: &str) -> String {
    let chars: Vec<char> = seed.chars().collect();
    let at = at % (chars.len() + 1);
    let end = (at + cut).min(chars.len());
    chars[..at].iter().collect::<String>() + insert + &chars[end..].iter().collect::<String>()
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(2000))]

    #[test]
    fn mutated_seeds_never_panic(
        which in 0usize..64,
        at in 0usize..4000,
        cut in 0usize..8,
        insert in proptest::sample::select(vec![
            "", ",", "\n", "-", "e308", "NaN", "inf", "\"", "#", "{", "]", "99999999999999999999", "0.", " ", "\u{feff}", "\r\n",
        ]),
    ) {
        let seeds = all_seeds();
        let text = mutate(&seeds[which % seeds.len()], at, cut, insert);
        let _ = parse_calibration(&text);
        let _ = parse_tracks(&text, "c", 1920, 1080);
        let _ = parse_ground_points(&text);
        let _ = parse_luminance(&text, "c", 60.0);
        let _ = parse_cart_labels(&text);
        let _ = parse_corrections(&text);
        let _ = SessionManifest::parse(&text, Path::new("/session"));
        if let Ok(file) = parse_trajectories(&text) {
            if let Ok(once) = file.render() {
                proptest::prop_assert_eq!(parse_trajectories(&once).unwrap().render().unwrap(), once);
            }
        }
    }
}

#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_tracks;

fuzz_target!(|data: &str| {
    if let Ok(set) = parse_tracks(data, "c", 1920, 1080) {
        for t in set.tracks {
            assert!(t.observations.windows(2).all(|w| w[0].frame < w[1].frame));
        }
    }
});

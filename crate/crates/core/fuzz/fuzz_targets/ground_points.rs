#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_ground_points;

fuzz_target!(|data: &str| {
    if let Ok(points) = parse_ground_points(data) {
        assert!(points.iter().all(|p| p.x.is_finite() && p.y.is_finite() && p.z.is_finite()));
    }
});

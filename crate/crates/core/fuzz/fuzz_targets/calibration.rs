#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_calibration;

fuzz_target!(|data: &str| {
    if let Ok(cams) = parse_calibration(data) {
        for c in cams {
            assert!(c.row_major().iter().all(|v| v.is_finite()));
        }
    }
});

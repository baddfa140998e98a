#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_luminance;
use trajlab::sync::{detect_sync_event, DetectParams};

fuzz_target!(|data: &str| {
    if let Ok(series) = parse_luminance(data, "c", 60.0) {
        let _ = detect_sync_event(&series, &DetectParams::default());
    }
});

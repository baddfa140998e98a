#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_corrections;

fuzz_target!(|data: &str| {
    if let Ok(log) = parse_corrections(data) {
        let text = serde_json::to_string(&log).unwrap();
        assert_eq!(parse_corrections(&text).unwrap(), log);
    }
});

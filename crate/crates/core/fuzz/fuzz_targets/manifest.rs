#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::SessionManifest;

fuzz_target!(|data: &str| {
    let _ = SessionManifest::parse(data, Path::new("/session"));
});

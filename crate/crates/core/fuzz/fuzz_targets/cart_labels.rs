#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_cart_labels;

fuzz_target!(|data: &str| {
    let _ = parse_cart_labels(data);
});

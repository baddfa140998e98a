#![no_main]

use libfuzzer_sys::fuzz_target;
use trajlab::ingest::parse_trajectories;

// Whatever parses and renders must render the same after one more round trip.
fuzz_target!(|data: &str| {
    let Ok(file) = parse_trajectories(data) else { return };
    let Ok(once) = file.render() else { return };
    let again = parse_trajectories(&once).expect("rendered file parses");
    assert_eq!(again.render().expect("renders"), once);
});

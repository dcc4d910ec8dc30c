#![no_main]

use concord::graph::load_attributes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = load_attributes(data);
});

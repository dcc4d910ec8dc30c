#![no_main]

use concord::graph::{load_edge_list, EdgeListFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = load_edge_list(data, &EdgeListFormat::default());
    // Same bytes under a comma layout hit the other delimiter paths.
    let comma = EdgeListFormat { delimiter: b',', ..Default::default() };
    let _ = load_edge_list(data, &comma);
});

#![no_main]

use concord::ensemble::ConsensusMatrix;
use concord::graph::WeightedGraph;
use libfuzzer_sys::fuzz_target;
use std::sync::OnceLock;

fn graph() -> &'static WeightedGraph {
    static G: OnceLock<WeightedGraph> = OnceLock::new();
    G.get_or_init(|| {
        let rows = [("a", "b"), ("a", "c"), ("b", "c"), ("d", "e"), ("d", "f"), ("e", "f"), ("c", "d")];
        WeightedGraph::from_edges(rows.iter().map(|&(u, v)| (u, v, 1.0))).unwrap().0
    })
}

fuzz_target!(|data: &[u8]| {
    let g = graph();
    if let Ok(m) = ConsensusMatrix::read_tsv(g, data) {
        // Anything that parses must survive a write/read round trip intact.
        let mut buf = Vec::new();
        m.write_tsv(g, &mut buf).unwrap();
        let back = ConsensusMatrix::read_tsv(g, buf.as_slice()).unwrap();
        assert_eq!(m.pairs(), back.pairs());
    }
});

//! Test-support crate: synthetic graph generators and slow reference
//! implementations ("oracles") that the main test suites check `concord`
//! against.
//!
//! Nothing in here depends on the `concord` crate. The oracles recompute
//! every quantity from first principles (dense adjacency matrices, exhaustive
//! partition enumeration, set-intersection contingency tables) so that a bug
//! in the production code cannot hide behind shared helpers.

pub mod gen;
pub mod oracle;

/// A generated graph: `nodes` vertices numbered `0..nodes`, plus an
/// undirected edge list with `u < v` and strictly positive weights.
///
/// Kept deliberately dumb so tests can massage it into whatever shape the
/// code under test expects.
#[derive(Debug, Clone)]
pub struct SynthGraph {
    pub nodes: u32,
    pub edges: Vec<(u32, u32, f64)>,
}

impl SynthGraph {
    /// Node ids of the form `n0`, `n1`, ... matching the vertex numbering.
    pub fn node_ids(&self) -> Vec<String> {
        (0..self.nodes).map(|i| format!("n{i}")).collect()
    }

    /// The edge list rendered as tab-separated `src\tdst\tweight` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("n{u}\tn{v}\t{w}\n"));
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }
}

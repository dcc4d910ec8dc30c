//! Seeded random graph generators.
//!
//! All generators are deterministic functions of their arguments; the RNG is
//! ChaCha8 seeded from the `seed` parameter, so a (params, seed) pair always
//! yields the same graph.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::SynthGraph;

/// Edge-weight law used by the generators.
#[derive(Debug, Clone, Copy)]
pub enum WeightKind {
    /// Every edge has weight 1.
    Unit,
    /// Weights drawn uniformly from `[lo, hi)`.
    Uniform(f64, f64),
}

impl WeightKind {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            WeightKind::Unit => 1.0,
            WeightKind::Uniform(lo, hi) => rng.gen_range(lo..hi),
        }
    }
}

/// Erdős–Rényi G(n, p), forced connected.
///
/// After sampling, components are stitched together with extra edges between
/// randomly chosen members, so the degree distribution is G(n, p) plus at
/// most `components - 1` edges. Fine for test corpora, not for science.
pub fn gnp_connected(n: u32, p: f64, weights: WeightKind, seed: u64) -> SynthGraph {
    assert!(n >= 1, "need at least one node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v, weights.sample(&mut rng)));
            }
        }
    }
    stitch_components(n, &mut edges, weights, &mut rng);
    SynthGraph { nodes: n, edges }
}

/// Planted-partition graph: `k` blocks of `size` nodes, intra-block pairs
/// joined with probability `p_in`, inter-block pairs with `p_out`.
///
/// Returns the graph together with the planted block label of every node.
/// Uses geometric skipping for the sparse inter-block pairs so multi-
/// thousand-node instances generate in milliseconds.
pub fn planted_partition(
    k: u32,
    size: u32,
    p_in: f64,
    p_out: f64,
    weights: WeightKind,
    seed: u64,
) -> (SynthGraph, Vec<u32>) {
    assert!(k >= 1 && size >= 1);
    let n = k * size;
    let labels: Vec<u32> = (0..n).map(|i| i / size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();

    // Dense intra-block sampling, block by block.
    for b in 0..k {
        let base = b * size;
        for i in 0..size {
            for j in (i + 1)..size {
                if rng.gen_bool(p_in) {
                    edges.push((base + i, base + j, weights.sample(&mut rng)));
                }
            }
        }
    }

    // Sparse inter-block sampling: enumerate the cross pairs implicitly and
    // jump between successes with geometric skips.
    let cross_pairs: u64 = {
        let total = (n as u64) * (n as u64 - 1) / 2;
        let intra = (k as u64) * (size as u64) * (size as u64 - 1) / 2;
        total - intra
    };
    if p_out > 0.0 && cross_pairs > 0 {
        let mut idx: u64 = 0;
        loop {
            // Geometric(p_out) skip; gen_range never sees an empty range.
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let skip = (u.ln() / (1.0 - p_out).ln()).floor() as u64;
            idx = idx.saturating_add(skip);
            if idx >= cross_pairs {
                break;
            }
            let (a, b) = nth_cross_pair(idx, k, size);
            edges.push((a, b, weights.sample(&mut rng)));
            idx += 1;
        }
    }

    edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    (SynthGraph { nodes: n, edges }, labels)
}

/// The `idx`-th (0-based) inter-block pair under row-major enumeration of
/// the upper triangle restricted to pairs whose blocks differ.
fn nth_cross_pair(idx: u64, k: u32, size: u32) -> (u32, u32) {
    let n = (k * size) as u64;
    let size = size as u64;
    // Row u has (n - u - 1) upper-triangle pairs, of which the ones inside
    // u's block tail are intra. Walk rows; fine because rows shrink fast and
    // this runs once per sampled edge.
    let mut remaining = idx;
    for u in 0..n {
        let block_end = (u / size + 1) * size;
        let cross_in_row = n - block_end;
        if remaining < cross_in_row {
            let v = block_end + remaining;
            return (u as u32, v as u32);
        }
        remaining -= cross_in_row;
    }
    unreachable!("cross-pair index out of range");
}

/// Join the connected components of `edges` into one by adding bridge edges.
fn stitch_components(n: u32, edges: &mut Vec<(u32, u32, f64)>, weights: WeightKind, rng: &mut ChaCha8Rng) {
    let comps = crate::oracle::components(n, edges);
    let num = comps.iter().copied().max().map_or(0, |m| m + 1);
    if num <= 1 {
        return;
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); num as usize];
    for (node, &c) in comps.iter().enumerate() {
        members[c as usize].push(node as u32);
    }
    for pair in members.windows(2) {
        let a = pair[0][rng.gen_range(0..pair[0].len())];
        let b = pair[1][rng.gen_range(0..pair[1].len())];
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        edges.push((lo, hi, weights.sample(rng)));
    }
    edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
}

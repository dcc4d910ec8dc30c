//! Partition similarity via normalized mutual information.
//!
//! All entropies use natural logarithms and come from the contingency table
//! of the two partitions. The per-cell form `(c/N) · ln(c·N / (n_x·n_y))`
//! keeps the two canonical extremes exact: independent partitions whose
//! cells all satisfy `c·N = n_x·n_y` give literally 0.0, and partitions that
//! are relabelings of each other short-circuit to literally 1.0.

use std::collections::HashMap;

use thiserror::Error;

use crate::detect::Partition;
use crate::ensemble::EnsembleResult;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("partitions are bound to different graphs")]
    NodeSetMismatch,
}

/// How mutual information is scaled into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmiNormalization {
    /// `2·I / (H1 + H2)` — the default.
    Arithmetic,
    /// `I / max(H1, H2)`.
    Max,
    /// `I / H(P1, P2)`.
    Joint,
}

impl std::fmt::Display for NmiNormalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NmiNormalization::Arithmetic => "arithmetic",
            NmiNormalization::Max => "max",
            NmiNormalization::Joint => "joint",
        })
    }
}

impl std::str::FromStr for NmiNormalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arithmetic" => Ok(NmiNormalization::Arithmetic),
            "max" => Ok(NmiNormalization::Max),
            "joint" => Ok(NmiNormalization::Joint),
            other => {
                Err(format!("unknown normalization {other:?} (expected arithmetic, max, or joint)"))
            }
        }
    }
}

/// Sparse contingency table between two partitions of the same graph.
pub struct PartitionPair {
    /// `(community in p1, community in p2) -> node count`, nonzero cells only.
    pub cells: HashMap<(u32, u32), u64>,
    /// Community sizes of p1.
    pub row_sums: Vec<u64>,
    /// Community sizes of p2.
    pub col_sums: Vec<u64>,
    pub total: u64,
}

/// Cross-tabulate two partitions. Errors unless both are bound to the same
/// graph.
pub fn contingency(p1: &Partition, p2: &Partition) -> Result<PartitionPair, CompareError> {
    if p1.graph_fingerprint() != p2.graph_fingerprint() || p1.len() != p2.len() {
        return Err(CompareError::NodeSetMismatch);
    }
    let mut cells: HashMap<(u32, u32), u64> = HashMap::new();
    let mut row_sums = vec![0u64; p1.num_communities()];
    let mut col_sums = vec![0u64; p2.num_communities()];
    for (&a, &b) in p1.labels().iter().zip(p2.labels()) {
        *cells.entry((a, b)).or_insert(0) += 1;
        row_sums[a as usize] += 1;
        col_sums[b as usize] += 1;
    }
    Ok(PartitionPair { cells, row_sums, col_sums, total: p1.len() as u64 })
}

fn entropy(sizes: &[u64], total: f64) -> f64 {
    let mut h = 0.0;
    for &s in sizes {
        if s > 0 {
            let p = s as f64 / total;
            h -= p * p.ln();
        }
    }
    h
}

/// NMI with the default arithmetic normalization.
pub fn nmi(p1: &Partition, p2: &Partition) -> Result<f64, CompareError> {
    nmi_with(p1, p2, NmiNormalization::Arithmetic)
}

/// NMI between two partitions of the same graph, in [0, 1].
///
/// Degenerate conventions: if both partitions are the single-community one
/// (zero entropy) the score is 1; if exactly one of them is, it is 0.
pub fn nmi_with(
    p1: &Partition,
    p2: &Partition,
    norm: NmiNormalization,
) -> Result<f64, CompareError> {
    let pair = contingency(p1, p2)?;
    Ok(score_tables(&pair, norm))
}

/// NMI between two labelings given as parallel slices: position k holds the
/// two community labels of the same node. Labels may be arbitrary u32s —
/// no graph binding, no canonical form required.
pub fn nmi_of_labelings(
    a: &[u32],
    b: &[u32],
    norm: NmiNormalization,
) -> Result<f64, CompareError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(CompareError::NodeSetMismatch);
    }
    let mut dense_a: HashMap<u32, u32> = HashMap::new();
    let mut dense_b: HashMap<u32, u32> = HashMap::new();
    let mut cells: HashMap<(u32, u32), u64> = HashMap::new();
    let mut row_sums = Vec::new();
    let mut col_sums = Vec::new();
    for (&la, &lb) in a.iter().zip(b) {
        let next = dense_a.len() as u32;
        let ra = *dense_a.entry(la).or_insert(next);
        if ra == next {
            row_sums.push(0);
        }
        let next = dense_b.len() as u32;
        let rb = *dense_b.entry(lb).or_insert(next);
        if rb == next {
            col_sums.push(0);
        }
        *cells.entry((ra, rb)).or_insert(0) += 1;
        row_sums[ra as usize] += 1;
        col_sums[rb as usize] += 1;
    }
    let pair = PartitionPair { cells, row_sums, col_sums, total: a.len() as u64 };
    Ok(score_tables(&pair, norm))
}

fn score_tables(pair: &PartitionPair, norm: NmiNormalization) -> f64 {
    let k1 = pair.row_sums.len();
    let k2 = pair.col_sums.len();

    // One nonzero cell per row and per column means the partitions are
    // relabelings of each other: exactly 1 by any normalization.
    if pair.cells.len() == k1 && k1 == k2 {
        return 1.0;
    }
    let n = pair.total as f64;
    let h1 = entropy(&pair.row_sums, n);
    let h2 = entropy(&pair.col_sums, n);
    if h1 == 0.0 || h2 == 0.0 {
        // Both zero is the identical-trivial case, already returned above.
        return 0.0;
    }
    let mut mi = 0.0;
    let mut h_joint = 0.0;
    for (&(a, b), &c) in &pair.cells {
        let p = c as f64 / n;
        let nx = pair.row_sums[a as usize] as f64;
        let ny = pair.col_sums[b as usize] as f64;
        mi += p * ((c as f64 * n) / (nx * ny)).ln();
        h_joint -= p * p.ln();
    }
    let value = match norm {
        NmiNormalization::Arithmetic => 2.0 * mi / (h1 + h2),
        NmiNormalization::Max => mi / h1.max(h2),
        NmiNormalization::Joint => mi / h_joint,
    };
    value.clamp(0.0, 1.0)
}

/// Mean NMI over all unordered pairs of ensemble runs, plus the number of
/// distinct partitions. Identical runs are grouped first, so the cost scales
/// with distinct partitions rather than with runs.
pub fn ensemble_nmi(er: &EnsembleResult) -> (f64, usize) {
    let mut reps: Vec<&Partition> = Vec::new();
    let mut mult: Vec<u64> = Vec::new();
    let mut index: HashMap<&[u32], usize> = HashMap::new();
    for p in er.partitions() {
        match index.get(p.labels()) {
            Some(&i) => mult[i] += 1,
            None => {
                index.insert(p.labels(), reps.len());
                reps.push(p);
                mult.push(1);
            }
        }
    }
    let n = er.n() as u64;
    let total_pairs = n * (n - 1) / 2;
    let mut sum = 0.0;
    for (i, &mi) in mult.iter().enumerate() {
        sum += (mi * (mi - 1) / 2) as f64; // identical pairs score 1
        for (j, &mj) in mult.iter().enumerate().skip(i + 1) {
            let v = nmi(reps[i], reps[j]).expect("ensemble partitions share one graph");
            sum += (mi * mj) as f64 * v;
        }
    }
    (sum / total_pairs as f64, reps.len())
}

/// Mean NMI between one partition (typically the consensus) and every run
/// of the ensemble.
pub fn consensus_nmi(consensus: &Partition, er: &EnsembleResult) -> Result<f64, CompareError> {
    let mut groups: HashMap<&[u32], u64> = HashMap::new();
    for p in er.partitions() {
        *groups.entry(p.labels()).or_insert(0) += 1;
    }
    let mut sum = 0.0;
    for p in er.partitions() {
        if let Some(m) = groups.remove(p.labels()) {
            sum += m as f64 * nmi(consensus, p)?;
        }
    }
    Ok(sum / er.n() as f64)
}

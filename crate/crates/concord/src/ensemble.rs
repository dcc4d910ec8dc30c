//! Detection ensembles, co-clustering consensus matrices, and iterated
//! consensus clustering.
//!
//! The pipeline: run the detector `n` times with derived seeds, count for
//! node pairs how often the runs agree, keep pairs whose agreement clears a
//! threshold `tau` as a new weighted graph, and repeat on that graph until
//! one iteration's runs all return the same partition. The matrix from the
//! *first* iteration is kept around because all downstream stability
//! metrics are defined on it.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::detect::{detect, DetectError, DetectionConfig, Partition};
use crate::graph::{GraphError, WeightedGraph};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("ensemble needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("invalid consensus config: {0}")]
    BadConfig(String),
    #[error("ensemble runs are inconsistent: {0}")]
    BadEnsemble(String),
    #[error("ensemble is not bound to this graph")]
    EnsembleMismatch,
    #[error("consensus matrix is not bound to this graph")]
    MatrixMismatch,
    #[error("invalid consensus pair: {0}")]
    BadPair(String),
    #[error(
        "consensus clustering did not converge after {iterations} iterations; \
         the most frequent partition of the last ensemble is attached"
    )]
    NoConvergence { iterations: u32, last: Box<Partition> },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Derive the seed for run `index` from a master seed.
///
/// SplitMix64-style finalizer: statistically independent streams for
/// consecutive indices, stable across platforms and releases. Consensus
/// iterations beyond the first derive their own ensemble master the same
/// way, keyed by iteration number.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The result of `n` independent seeded detection runs on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    partitions: Vec<Partition>,
    modularities: Vec<f64>,
    seeds: Vec<u64>,
}

impl EnsembleResult {
    /// Assemble from parallel vectors. All partitions must be bound to the
    /// same graph and there must be at least two runs. The caller is
    /// responsible for `modularities[i]` actually being run `i`'s score on
    /// the graph the ensemble ran on.
    pub fn new(
        partitions: Vec<Partition>,
        modularities: Vec<f64>,
        seeds: Vec<u64>,
    ) -> Result<EnsembleResult, EnsembleError> {
        if partitions.len() < 2 {
            return Err(EnsembleError::TooFewRuns(partitions.len()));
        }
        if partitions.len() != modularities.len() || partitions.len() != seeds.len() {
            return Err(EnsembleError::BadEnsemble(format!(
                "{} partitions, {} modularities, {} seeds",
                partitions.len(),
                modularities.len(),
                seeds.len()
            )));
        }
        let fp = partitions[0].graph_fingerprint();
        if partitions.iter().any(|p| p.graph_fingerprint() != fp) {
            return Err(EnsembleError::BadEnsemble(
                "partitions are bound to different graphs".into(),
            ));
        }
        Ok(EnsembleResult { partitions, modularities, seeds })
    }

    pub fn n(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn modularities(&self) -> &[f64] {
        &self.modularities
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    /// True when every run returned the same partition.
    pub fn is_unanimous(&self) -> bool {
        self.partitions[1..].iter().all(|p| p == &self.partitions[0])
    }

    pub fn is_bound_to(&self, g: &WeightedGraph) -> bool {
        self.partitions[0].graph_fingerprint() == g.fingerprint()
            && self.partitions[0].len() == g.node_count()
    }

    /// Labels of the most frequent partition; earliest run wins ties.
    pub fn most_frequent(&self) -> &Partition {
        let mut counts: HashMap<&[u32], u32> = HashMap::new();
        for p in &self.partitions {
            *counts.entry(p.labels()).or_insert(0) += 1;
        }
        let mut best = &self.partitions[0];
        let mut best_count = 0;
        for p in &self.partitions {
            let c = counts[p.labels()];
            if c > best_count {
                best_count = c;
                best = p;
            }
        }
        best
    }
}

/// Run `runs` seeded detections of `cfg` on `g`. Per-run seeds are
/// `mix_seed(master_seed, i)`; `cfg.seed` is ignored. Runs execute in
/// parallel on the current rayon pool, and the result is identical whatever
/// the pool size, including 1.
pub fn run_ensemble(
    g: &WeightedGraph,
    cfg: &DetectionConfig,
    runs: usize,
    master_seed: u64,
) -> Result<EnsembleResult, EnsembleError> {
    if runs < 2 {
        return Err(EnsembleError::TooFewRuns(runs));
    }
    cfg.validate()?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| mix_seed(master_seed, i)).collect();
    let partitions: Vec<Partition> = seeds
        .par_iter()
        .map(|&seed| detect(g, &DetectionConfig { seed, ..*cfg }))
        .collect::<Result<_, _>>()?;
    let modularities: Vec<f64> = partitions
        .iter()
        .map(|p| crate::detect::modularity(g, p, cfg.gamma))
        .collect::<Result<_, _>>()?;
    EnsembleResult::new(partitions, modularities, seeds)
}

/// Which node pairs a consensus matrix keeps counts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusMode {
    /// Every pair co-clustered at least once. Quadratic in community sizes.
    Full,
    /// Only pairs joined by an edge of the source graph (all of them, even
    /// when never co-clustered). Linear in edges.
    EdgeRestricted,
}

impl std::fmt::Display for ConsensusMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConsensusMode::Full => "full",
            ConsensusMode::EdgeRestricted => "edge-restricted",
        })
    }
}

impl std::str::FromStr for ConsensusMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ConsensusMode::Full),
            "edge-restricted" => Ok(ConsensusMode::EdgeRestricted),
            other => Err(format!("unknown mode {other:?} (expected full or edge-restricted)")),
        }
    }
}

/// Sparse co-clustering counts over unordered node pairs, bound to a graph.
///
/// A stored `(i, j, count)` means the pair was co-clustered in `count` of
/// `n_runs` runs; the agreement value is `count / n_runs`. Absent pairs have
/// count 0. In edge-restricted mode every adjacent pair is stored, count 0
/// included, so the edge set is always fully covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusMatrix {
    mode: ConsensusMode,
    n_runs: u32,
    num_nodes: u32,
    source_fingerprint: u64,
    /// `(i, j, count)` with `i < j`, sorted.
    pairs: Vec<(u32, u32, u32)>,
}

impl ConsensusMatrix {
    /// Build from explicit counts. Pairs are normalized to `i < j` and
    /// sorted; in edge-restricted mode every pair must be an edge of `g`
    /// and missing edges are filled in with count 0.
    pub fn from_counts(
        g: &WeightedGraph,
        mode: ConsensusMode,
        n_runs: u32,
        counts: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Result<ConsensusMatrix, EnsembleError> {
        if n_runs == 0 {
            return Err(EnsembleError::BadEnsemble("n_runs must be at least 1".into()));
        }
        let n = g.node_count() as u32;
        let mut seen: HashMap<(u32, u32), u32> = HashMap::new();
        for (a, b, count) in counts {
            if a == b {
                return Err(EnsembleError::BadPair(format!("self pair ({a}, {a})")));
            }
            if a >= n || b >= n {
                return Err(EnsembleError::BadPair(format!(
                    "pair ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if count > n_runs {
                return Err(EnsembleError::BadPair(format!(
                    "count {count} exceeds run count {n_runs} for pair ({a}, {b})"
                )));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, count).is_some() {
                return Err(EnsembleError::BadPair(format!(
                    "duplicate pair ({}, {})",
                    key.0, key.1
                )));
            }
        }
        if mode == ConsensusMode::EdgeRestricted {
            let edges: std::collections::HashSet<(u32, u32)> =
                g.edges().iter().map(|e| (e.u, e.v)).collect();
            for &key in seen.keys() {
                if !edges.contains(&key) {
                    return Err(EnsembleError::BadPair(format!(
                        "pair ({}, {}) is not an edge of the source graph",
                        key.0, key.1
                    )));
                }
            }
            for &key in &edges {
                seen.entry(key).or_insert(0);
            }
        }
        let mut pairs: Vec<(u32, u32, u32)> =
            seen.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        pairs.sort_unstable();
        Ok(ConsensusMatrix {
            mode,
            n_runs,
            num_nodes: n,
            source_fingerprint: g.fingerprint(),
            pairs,
        })
    }

    pub fn mode(&self) -> ConsensusMode {
        self.mode
    }

    pub fn n_runs(&self) -> u32 {
        self.n_runs
    }

    pub fn num_nodes(&self) -> u32 {
        self.num_nodes
    }

    pub fn is_bound_to(&self, g: &WeightedGraph) -> bool {
        self.source_fingerprint == g.fingerprint() && self.num_nodes as usize == g.node_count()
    }

    /// Stored `(i, j, count)` triples, `i < j`, ascending.
    pub fn pairs(&self) -> &[(u32, u32, u32)] {
        &self.pairs
    }

    /// Co-clustering count for a pair; `None` when the pair is not stored,
    /// which means count 0 for any pair of valid node indices.
    pub fn count(&self, a: u32, b: u32) -> Option<u32> {
        let key = (a.min(b), a.max(b));
        self.pairs
            .binary_search_by_key(&key, |&(i, j, _)| (i, j))
            .ok()
            .map(|idx| self.pairs[idx].2)
    }

    /// Agreement value `count / n_runs` in `[0, 1]`. Absent pairs are 0;
    /// a node always agrees with itself, so `value(i, i)` is 1.
    pub fn value(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 1.0;
        }
        self.count(a, b).map_or(0.0, |c| f64::from(c) / f64::from(self.n_runs))
    }

    /// True when every stored count is 0 or `n_runs`, i.e. the runs that
    /// produced the matrix were unanimous.
    pub fn is_converged(&self) -> bool {
        self.pairs.iter().all(|&(_, _, c)| c == 0 || c == self.n_runs)
    }

    /// Write `node_i,node_j,count,n,c_ij` rows, tab-separated, sorted by
    /// node index pair.
    pub fn write_tsv<W: Write>(&self, g: &WeightedGraph, out: W) -> Result<(), EnsembleError> {
        if !self.is_bound_to(g) {
            return Err(EnsembleError::MatrixMismatch);
        }
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["node_i", "node_j", "count", "n", "c_ij"]).map_err(tsv_err)?;
        for &(i, j, count) in &self.pairs {
            let c = f64::from(count) / f64::from(self.n_runs);
            w.write_record([
                g.node_id(i),
                g.node_id(j),
                &count.to_string(),
                &self.n_runs.to_string(),
                &format!("{c}"),
            ])
            .map_err(tsv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a matrix written by `write_tsv` back against the same graph.
    ///
    /// The mode is inferred: a pair set that covers the graph's edges
    /// exactly loads as edge-restricted, anything else as full. The `c_ij`
    /// column must agree with `count / n`.
    pub fn read_tsv<R: Read>(g: &WeightedGraph, input: R) -> Result<ConsensusMatrix, EnsembleError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .from_reader(input);
        {
            let headers = rdr.headers().map_err(tsv_err)?;
            let expected = ["node_i", "node_j", "count", "n", "c_ij"];
            if headers.iter().ne(expected) {
                return Err(EnsembleError::Parse {
                    line: 1,
                    msg: format!("expected header {}, found {headers:?}", expected.join("\\t")),
                });
            }
        }
        let mut counts: Vec<(u32, u32, u32)> = Vec::new();
        let mut n_runs: Option<u32> = None;
        for record in rdr.records() {
            let record = record.map_err(tsv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |idx: usize| record.get(idx).unwrap_or_default();
            let node = |idx: usize| {
                g.index_of(field(idx)).ok_or_else(|| EnsembleError::Parse {
                    line,
                    msg: format!("unknown node id {:?}", field(idx)),
                })
            };
            let i = node(0)?;
            let j = node(1)?;
            let count: u32 = field(2).parse().map_err(|_| EnsembleError::Parse {
                line,
                msg: format!("count {:?} is not a non-negative integer", field(2)),
            })?;
            let n: u32 = field(3).parse().map_err(|_| EnsembleError::Parse {
                line,
                msg: format!("n {:?} is not a positive integer", field(3)),
            })?;
            match n_runs {
                None => n_runs = Some(n),
                Some(prev) if prev != n => {
                    return Err(EnsembleError::Parse {
                        line,
                        msg: format!("inconsistent run count: {n} after {prev}"),
                    })
                }
                _ => {}
            }
            let c: f64 = field(4).parse().map_err(|_| EnsembleError::Parse {
                line,
                msg: format!("c_ij {:?} is not a number", field(4)),
            })?;
            if n == 0 || (c - f64::from(count) / f64::from(n)).abs() > 1e-9 {
                return Err(EnsembleError::Parse {
                    line,
                    msg: format!("c_ij {c} does not match count {count} / n {n}"),
                });
            }
            counts.push((i, j, count));
        }
        let n_runs = n_runs.ok_or(EnsembleError::Parse {
            line: 1,
            msg: "matrix has no data rows".into(),
        })?;
        let edge_set: std::collections::HashSet<(u32, u32)> =
            g.edges().iter().map(|e| (e.u, e.v)).collect();
        let pair_set: std::collections::HashSet<(u32, u32)> =
            counts.iter().map(|&(a, b, _)| (a.min(b), a.max(b))).collect();
        let mode = if pair_set == edge_set {
            ConsensusMode::EdgeRestricted
        } else {
            ConsensusMode::Full
        };
        ConsensusMatrix::from_counts(g, mode, n_runs, counts).map_err(|e| match e {
            // Surface duplicate/self pairs as parse problems: they came from the file.
            EnsembleError::BadPair(msg) => EnsembleError::Parse { line: 0, msg },
            other => other,
        })
    }
}

fn tsv_err(e: csv::Error) -> EnsembleError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return EnsembleError::Io(io);
        }
        unreachable!()
    }
    let line = e.position().map_or(0, |p| p.line());
    EnsembleError::Parse { line, msg: e.to_string() }
}

/// Count, over the ensemble's runs, how often each node pair lands in one
/// community. Integer accumulation, so run order can never matter.
pub fn consensus_matrix(
    g: &WeightedGraph,
    er: &EnsembleResult,
    mode: ConsensusMode,
) -> Result<ConsensusMatrix, EnsembleError> {
    if !er.is_bound_to(g) {
        return Err(EnsembleError::EnsembleMismatch);
    }
    match mode {
        ConsensusMode::Full => {
            let mut acc: HashMap<(u32, u32), u32> = HashMap::new();
            for p in er.partitions() {
                for members in p.communities() {
                    for (a, &u) in members.iter().enumerate() {
                        for &v in &members[a + 1..] {
                            *acc.entry((u, v)).or_insert(0) += 1;
                        }
                    }
                }
            }
            ConsensusMatrix::from_counts(
                g,
                mode,
                er.n() as u32,
                acc.into_iter().map(|((a, b), c)| (a, b, c)),
            )
        }
        ConsensusMode::EdgeRestricted => {
            let labels: Vec<&[u32]> = er.partitions().iter().map(|p| p.labels()).collect();
            let counts = g.edges().iter().map(|e| {
                let c = labels
                    .iter()
                    .filter(|l| l[e.u as usize] == l[e.v as usize])
                    .count() as u32;
                (e.u, e.v, c)
            });
            ConsensusMatrix::from_counts(g, mode, er.n() as u32, counts)
        }
    }
}

/// Keep pairs whose agreement reaches `tau` as edges of a new graph over
/// the same nodes (same ids, same order), weighted by the agreement value.
///
/// Any node left isolated is reattached to its best-agreeing partner among
/// the stored pairs (ties to the lowest partner index) unless `reattach` is
/// false. Returns the graph and how many nodes were reattached. Pairs with
/// count 0 never become edges.
pub fn threshold_filter(
    cm: &ConsensusMatrix,
    source: &WeightedGraph,
    tau: f64,
    reattach: bool,
) -> Result<(WeightedGraph, usize), EnsembleError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(EnsembleError::BadThreshold(tau));
    }
    if !cm.is_bound_to(source) {
        return Err(EnsembleError::MatrixMismatch);
    }
    let n = source.node_count();
    let n_runs = f64::from(cm.n_runs());
    let mut kept: Vec<(u32, u32, f64)> = Vec::new();
    let mut attached = vec![false; n];
    for &(i, j, count) in cm.pairs() {
        if count == 0 {
            continue;
        }
        let c = f64::from(count) / n_runs;
        if c >= tau {
            kept.push((i, j, c));
            attached[i as usize] = true;
            attached[j as usize] = true;
        }
    }
    let mut reattached = 0usize;
    if reattach {
        // Best stored partner per isolated node: highest agreement, then
        // lowest partner index. One pass over the stored pairs.
        let mut best: Vec<Option<(u32, u32)>> = vec![None; n]; // (count, partner)
        for &(i, j, count) in cm.pairs() {
            if count == 0 {
                continue;
            }
            for (node, partner) in [(i, j), (j, i)] {
                if attached[node as usize] {
                    continue;
                }
                let slot = &mut best[node as usize];
                let better = match *slot {
                    None => true,
                    Some((bc, bp)) => count > bc || (count == bc && partner < bp),
                };
                if better {
                    *slot = Some((count, partner));
                }
            }
        }
        let mut extra: std::collections::BTreeSet<(u32, u32, u32)> = std::collections::BTreeSet::new();
        for (node, slot) in best.iter().enumerate() {
            if attached[node] {
                continue;
            }
            if let Some((count, partner)) = *slot {
                let a = (node as u32).min(partner);
                let b = (node as u32).max(partner);
                extra.insert((a, b, count));
                reattached += 1;
            }
            // A node with no stored positive pair stays isolated.
        }
        for (a, b, count) in extra {
            kept.push((a, b, f64::from(count) / n_runs));
        }
    }
    let (g, _) = WeightedGraph::build(source.ids().to_vec(), kept)?;
    Ok((g, reattached))
}

/// Settings for iterated consensus clustering.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConsensusConfig {
    /// Detection settings for every run; the `seed` field is ignored.
    pub detection: DetectionConfig,
    /// Runs per iteration; at least 2.
    pub n_runs: usize,
    /// Agreement threshold for keeping pairs, in [0, 1].
    pub tau: f64,
    pub mode: ConsensusMode,
    /// Iteration cap before giving up; at least 1.
    pub max_iterations: u32,
    /// Reattach nodes isolated by thresholding to their best partner.
    pub reattach_isolated: bool,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            detection: DetectionConfig::default(),
            n_runs: 100,
            tau: 0.5,
            mode: ConsensusMode::Full,
            max_iterations: 10,
            reattach_isolated: true,
        }
    }
}

impl ConsensusConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        self.detection.validate()?;
        if self.n_runs < 2 {
            return Err(EnsembleError::TooFewRuns(self.n_runs));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(EnsembleError::BadThreshold(self.tau));
        }
        if self.max_iterations < 1 {
            return Err(EnsembleError::BadConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything consensus clustering produces: the agreed partition (bound to
/// the original graph), the first iteration's matrix and ensemble, and how
/// many iterations it took.
#[derive(Debug, Clone)]
pub struct ConsensusOutcome {
    pub partition: Partition,
    pub first_matrix: ConsensusMatrix,
    pub first_ensemble: EnsembleResult,
    pub iterations: u32,
}

/// Iterate [ensemble → matrix → threshold → new graph] until one
/// iteration's runs are unanimous. Typically one to three iterations
/// suffice; hitting `max_iterations` is an error carrying the most frequent
/// partition of the last ensemble for diagnosis.
pub fn consensus_cluster(
    g: &WeightedGraph,
    cfg: &ConsensusConfig,
    master_seed: u64,
) -> Result<ConsensusOutcome, EnsembleError> {
    cfg.validate()?;
    let first_ensemble = run_ensemble(g, &cfg.detection, cfg.n_runs, master_seed)?;
    let first_matrix = consensus_matrix(g, &first_ensemble, cfg.mode)?;
    let (partition, iterations) =
        iterate_from(g, cfg, master_seed, &first_matrix, &first_ensemble)?;
    Ok(ConsensusOutcome { partition, first_matrix, first_ensemble, iterations })
}

/// Continue consensus clustering from a precomputed first iteration.
fn iterate_from(
    g: &WeightedGraph,
    cfg: &ConsensusConfig,
    master_seed: u64,
    first_matrix: &ConsensusMatrix,
    first_ensemble: &EnsembleResult,
) -> Result<(Partition, u32), EnsembleError> {
    let rebind = |p: &Partition| Partition::from_labels(g, p.labels().to_vec());
    if first_ensemble.is_unanimous() {
        return Ok((rebind(&first_ensemble.partitions()[0]), 1));
    }
    if cfg.max_iterations == 1 {
        return Err(EnsembleError::NoConvergence {
            iterations: 1,
            last: Box::new(rebind(first_ensemble.most_frequent())),
        });
    }
    let (mut current, _) = threshold_filter(first_matrix, g, cfg.tau, cfg.reattach_isolated)?;
    for iteration in 2..=cfg.max_iterations {
        let er = run_ensemble(&current, &cfg.detection, cfg.n_runs, mix_seed(master_seed, u64::from(iteration)))?;
        if er.is_unanimous() {
            // Filtered graphs keep the original node order, so labels carry over.
            return Ok((rebind(&er.partitions()[0]), iteration));
        }
        if iteration == cfg.max_iterations {
            return Err(EnsembleError::NoConvergence {
                iterations: iteration,
                last: Box::new(rebind(er.most_frequent())),
            });
        }
        let cm = consensus_matrix(&current, &er, cfg.mode)?;
        let (next, _) = threshold_filter(&cm, &current, cfg.tau, cfg.reattach_isolated)?;
        current = next;
    }
    unreachable!("loop returns before exhausting iterations")
}

/// One threshold's outcome within a sweep.
#[derive(Debug, Clone)]
pub struct TauSweepEntry {
    pub tau: f64,
    pub partition: Partition,
    /// Modularity of the consensus partition on the ORIGINAL graph.
    pub modularity: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone)]
pub struct TauSweep {
    /// One entry per grid value, ascending tau.
    pub entries: Vec<TauSweepEntry>,
    /// Index of the entry with the largest modularity; ties go to the
    /// smallest tau.
    pub best: usize,
    pub first_matrix: ConsensusMatrix,
    pub first_ensemble: EnsembleResult,
}

/// Run consensus clustering once per grid value, reusing one shared first
/// ensemble, and mark the tau whose consensus scores highest on `g`.
/// `cfg.tau` is ignored in favor of the grid.
pub fn tau_sweep(
    g: &WeightedGraph,
    cfg: &ConsensusConfig,
    grid: &[f64],
    master_seed: u64,
) -> Result<TauSweep, EnsembleError> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(EnsembleError::BadConfig("tau grid is empty".into()));
    }
    let mut taus = grid.to_vec();
    for &t in &taus {
        if !(0.0..=1.0).contains(&t) {
            return Err(EnsembleError::BadThreshold(t));
        }
    }
    taus.sort_unstable_by(|a, b| a.partial_cmp(b).expect("taus are finite"));
    taus.dedup();
    let first_ensemble = run_ensemble(g, &cfg.detection, cfg.n_runs, master_seed)?;
    let first_matrix = consensus_matrix(g, &first_ensemble, cfg.mode)?;
    let mut entries = Vec::with_capacity(taus.len());
    for tau in taus {
        let sub = ConsensusConfig { tau, ..*cfg };
        let (partition, iterations) =
            iterate_from(g, &sub, master_seed, &first_matrix, &first_ensemble)?;
        let modularity = crate::detect::modularity(g, &partition, cfg.detection.gamma)?;
        entries.push(TauSweepEntry { tau, partition, modularity, iterations });
    }
    let mut best = 0;
    for (idx, e) in entries.iter().enumerate() {
        if e.modularity > entries[best].modularity {
            best = idx;
        }
    }
    Ok(TauSweep { entries, best, first_matrix, first_ensemble })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::modularity;
    use crate::graph::{load_edge_list, EdgeListFormat};

    fn two_triangles() -> WeightedGraph {
        let text = "a\tb\nb\tc\na\tc\nd\te\ne\tf\nd\tf\nc\td\n";
        load_edge_list(text.as_bytes(), &EdgeListFormat::default()).unwrap().0
    }

    fn path3() -> WeightedGraph {
        load_edge_list("a\tb\nb\tc\n".as_bytes(), &EdgeListFormat::default()).unwrap().0
    }

    /// Ensemble of hand-picked partitions with correct modularities.
    fn fake_ensemble(g: &WeightedGraph, labelings: &[&[u32]]) -> EnsembleResult {
        let partitions: Vec<Partition> =
            labelings.iter().map(|l| Partition::from_labels(g, l.to_vec())).collect();
        let modularities =
            partitions.iter().map(|p| modularity(g, p, 1.0).unwrap()).collect();
        let seeds = (0..labelings.len() as u64).collect();
        EnsembleResult::new(partitions, modularities, seeds).unwrap()
    }

    #[test]
    fn mix_seed_is_stable_and_spreads() {
        assert_eq!(mix_seed(0, 0), mix_seed(0, 0));
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| mix_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(mix_seed(0, 1), mix_seed(1, 0));
    }

    #[test]
    fn ensemble_needs_two_runs() {
        let g = two_triangles();
        assert!(matches!(
            run_ensemble(&g, &DetectionConfig::default(), 1, 0),
            Err(EnsembleError::TooFewRuns(1))
        ));
    }

    #[test]
    fn ensemble_is_deterministic_and_unanimous_on_two_triangles() {
        let g = two_triangles();
        let cfg = DetectionConfig::default();
        let a = run_ensemble(&g, &cfg, 100, 9).unwrap();
        let b = run_ensemble(&g, &cfg, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.is_unanimous());
        assert_eq!(a.partitions()[0].labels(), &[0, 0, 0, 1, 1, 1]);
        for &q in a.modularities() {
            assert!((q - 5.0 / 14.0).abs() < 1e-12);
        }
        assert_eq!(a.seeds(), (0..100).map(|i| mix_seed(9, i)).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn counting_matches_the_definition() {
        // Three partitions of the path a-b-c; a,b together in two of them.
        let g = path3();
        let er = fake_ensemble(&g, &[&[0, 0, 1], &[0, 0, 0], &[0, 1, 1]]);
        let cm = consensus_matrix(&g, &er, ConsensusMode::Full).unwrap();
        assert_eq!(cm.count(0, 1), Some(2));
        assert!((cm.value(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cm.count(1, 2), Some(2));
        assert_eq!(cm.count(0, 2), Some(1)); // only the all-in-one run
        assert_eq!(cm.value(0, 0), 1.0); // diagonal convention
    }

    #[test]
    fn unanimous_ensembles_yield_zero_one_matrices() {
        let g = two_triangles();
        let er = run_ensemble(&g, &DetectionConfig::default(), 10, 1).unwrap();
        for mode in [ConsensusMode::Full, ConsensusMode::EdgeRestricted] {
            let cm = consensus_matrix(&g, &er, mode).unwrap();
            assert!(cm.is_converged());
            for &(_, _, c) in cm.pairs() {
                assert!(c == 0 || c == 10);
            }
        }
        // Never co-clustered pairs are simply absent in full mode.
        let cm = consensus_matrix(&g, &er, ConsensusMode::Full).unwrap();
        let bridge = (g.index_of("c").unwrap(), g.index_of("d").unwrap());
        assert_eq!(cm.count(bridge.0, bridge.1), None);
        assert_eq!(cm.value(bridge.0, bridge.1), 0.0);
    }

    #[test]
    fn edge_restricted_covers_exactly_the_edges() {
        let g = two_triangles();
        let er = run_ensemble(&g, &DetectionConfig::default(), 10, 1).unwrap();
        let cm = consensus_matrix(&g, &er, ConsensusMode::EdgeRestricted).unwrap();
        assert_eq!(cm.pairs().len(), g.edge_count());
        let bridge = (g.index_of("c").unwrap(), g.index_of("d").unwrap());
        assert_eq!(cm.count(bridge.0, bridge.1), Some(0));
        // Adjacent pairs agree with the full matrix.
        let full = consensus_matrix(&g, &er, ConsensusMode::Full).unwrap();
        for e in g.edges() {
            assert_eq!(cm.value(e.u, e.v), full.value(e.u, e.v));
        }
    }

    #[test]
    fn run_order_does_not_change_the_matrix() {
        let g = path3();
        let a = fake_ensemble(&g, &[&[0, 0, 1], &[0, 0, 0], &[0, 1, 1]]);
        let b = fake_ensemble(&g, &[&[0, 1, 1], &[0, 0, 1], &[0, 0, 0]]);
        assert_eq!(
            consensus_matrix(&g, &a, ConsensusMode::Full).unwrap(),
            consensus_matrix(&g, &b, ConsensusMode::Full).unwrap()
        );
    }

    #[test]
    fn threshold_filter_keeps_and_reattaches() {
        // Agreement ab = 0.9, bc = 0.4 on the path a-b-c; tau = 0.5 keeps ab
        // and reattaches the isolated c through its only partner.
        let g = path3();
        let cm = ConsensusMatrix::from_counts(
            &g,
            ConsensusMode::EdgeRestricted,
            10,
            [(0u32, 1u32, 9u32), (1, 2, 4)],
        )
        .unwrap();
        let (filtered, reattached) = threshold_filter(&cm, &g, 0.5, true).unwrap();
        assert_eq!(reattached, 1);
        assert_eq!(filtered.node_count(), 3);
        let weights: Vec<(u32, u32, f64)> =
            filtered.edges().iter().map(|e| (e.u, e.v, e.weight)).collect();
        assert_eq!(weights, vec![(0, 1, 0.9), (1, 2, 0.4)]);

        let (bare, reattached) = threshold_filter(&cm, &g, 0.5, false).unwrap();
        assert_eq!(reattached, 0);
        assert_eq!(bare.edge_count(), 1);
        assert_eq!(bare.node_count(), 3);
        assert_eq!(bare.ids(), g.ids());
    }

    #[test]
    fn threshold_zero_keeps_every_positive_pair() {
        let g = path3();
        let cm = ConsensusMatrix::from_counts(
            &g,
            ConsensusMode::EdgeRestricted,
            10,
            [(0u32, 1u32, 9u32), (1, 2, 0)],
        )
        .unwrap();
        let (filtered, _) = threshold_filter(&cm, &g, 0.0, true).unwrap();
        // The zero-count pair never becomes an edge, and c has no positive
        // partner to be reattached through.
        assert_eq!(filtered.edge_count(), 1);
    }

    #[test]
    fn threshold_validates_inputs() {
        let g = path3();
        let cm =
            ConsensusMatrix::from_counts(&g, ConsensusMode::Full, 10, [(0u32, 1u32, 5u32)]).unwrap();
        assert!(matches!(
            threshold_filter(&cm, &g, 1.5, true),
            Err(EnsembleError::BadThreshold(_))
        ));
        let other = two_triangles();
        assert!(matches!(
            threshold_filter(&cm, &other, 0.5, true),
            Err(EnsembleError::MatrixMismatch)
        ));
    }

    #[test]
    fn from_counts_validates_pairs() {
        let g = path3();
        for (pairs, what) in [
            (vec![(0u32, 0u32, 1u32)], "self pair"),
            (vec![(0, 7, 1)], "out of range"),
            (vec![(0, 1, 11)], "count over n"),
            (vec![(0, 1, 1), (1, 0, 2)], "duplicate"),
            (vec![(0, 2, 1)], "non-edge in edge-restricted mode"),
        ] {
            let res = ConsensusMatrix::from_counts(&g, ConsensusMode::EdgeRestricted, 10, pairs);
            assert!(matches!(res, Err(EnsembleError::BadPair(_))), "{what}");
        }
    }

    #[test]
    fn consensus_on_two_triangles_converges_in_one_iteration() {
        let g = two_triangles();
        let cfg = ConsensusConfig { n_runs: 100, tau: 0.5, ..Default::default() };
        let out = consensus_cluster(&g, &cfg, 0).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.partition.labels(), &[0, 0, 0, 1, 1, 1]);
        assert!(out.partition.is_bound_to(&g));
        assert!(out.first_matrix.is_converged());
        let q = modularity(&g, &out.partition, 1.0).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_reuses_one_ensemble_and_picks_smallest_tau_on_ties() {
        let g = two_triangles();
        let cfg = ConsensusConfig { n_runs: 50, ..Default::default() };
        let grid = [0.9, 0.1, 0.5]; // deliberately unsorted
        let sweep = tau_sweep(&g, &cfg, &grid, 3).unwrap();
        assert_eq!(sweep.entries.len(), 3);
        assert!((0..3).all(|i| sweep.entries[i].partition.labels() == &[0, 0, 0, 1, 1, 1]));
        let qs: Vec<f64> = sweep.entries.iter().map(|e| e.modularity).collect();
        assert!(qs.iter().all(|q| (q - 5.0 / 14.0).abs() < 1e-12));
        // Unanimity makes every tau tie; the smallest wins.
        assert_eq!(sweep.best, 0);
        assert!((sweep.entries[0].tau - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let g = two_triangles();
        let cfg = ConsensusConfig::default();
        assert!(matches!(tau_sweep(&g, &cfg, &[], 0), Err(EnsembleError::BadConfig(_))));
        assert!(matches!(
            tau_sweep(&g, &cfg, &[0.5, 1.2], 0),
            Err(EnsembleError::BadThreshold(_))
        ));
    }

    #[test]
    fn tsv_round_trip_preserves_matrix_and_mode() {
        let g = two_triangles();
        let er = run_ensemble(&g, &DetectionConfig::default(), 10, 5).unwrap();
        for mode in [ConsensusMode::Full, ConsensusMode::EdgeRestricted] {
            let cm = consensus_matrix(&g, &er, mode).unwrap();
            let mut buf = Vec::new();
            cm.write_tsv(&g, &mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.starts_with("node_i\tnode_j\tcount\tn\tc_ij\n"), "{text}");
            let back = ConsensusMatrix::read_tsv(&g, buf.as_slice()).unwrap();
            assert_eq!(back, cm, "{mode}");
        }
    }

    #[test]
    fn tsv_reader_rejects_corrupt_rows() {
        let g = path3();
        let header = "node_i\tnode_j\tcount\tn\tc_ij\n";
        for (body, what) in [
            ("zz\tb\t1\t10\t0.1\n", "unknown id"),
            ("a\tb\tx\t10\t0.1\n", "bad count"),
            ("a\tb\t1\t10\t0.5\n", "c_ij mismatch"),
            ("a\tb\t1\t10\t0.1\na\tb\t1\t10\t0.1\n", "duplicate pair"),
            ("a\tb\t1\t10\t0.1\nb\tc\t1\t5\t0.2\n", "inconsistent n"),
            ("", "no rows"),
        ] {
            let input = format!("{header}{body}");
            let res = ConsensusMatrix::read_tsv(&g, input.as_bytes());
            assert!(matches!(res, Err(EnsembleError::Parse { .. })), "{what}");
        }
    }

    #[test]
    fn nonconvergence_carries_the_last_iterate() {
        // A 6-cycle has two families of equal-score optima (three pairs vs
        // two triples), so different seeds genuinely disagree. Cap at one
        // iteration to hit the failure path deterministically.
        let g = load_edge_list(
            "a\tb\nb\tc\nc\td\nd\te\ne\tf\nf\ta\n".as_bytes(),
            &EdgeListFormat::default(),
        )
        .unwrap()
        .0;
        let mut found = None;
        for master in 0..2000u64 {
            let er = run_ensemble(&g, &DetectionConfig::default(), 2, master).unwrap();
            if !er.is_unanimous() {
                found = Some(master);
                break;
            }
        }
        let master = found.expect("some pair of seeds should disagree on the 6-cycle");
        let cfg = ConsensusConfig { n_runs: 2, max_iterations: 1, ..Default::default() };
        match consensus_cluster(&g, &cfg, master) {
            Err(EnsembleError::NoConvergence { iterations: 1, last }) => {
                assert!(last.is_bound_to(&g));
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}

//! Modularity and seeded community detection.
//!
//! Two algorithm variants share one engine. `louvain` is plain greedy local
//! moving plus graph aggregation. `leiden-refined` inserts a refinement pass
//! before each aggregation: every community is split into internally
//! connected sub-communities grown by randomized merging of singletons, the
//! aggregate graph is built over those sub-communities, and its starting
//! labels come from the unrefined communities. Refinement is what lets an
//! ensemble of seeds disagree productively instead of collapsing onto one
//! greedy trajectory, and it is the variant that can promise connected
//! communities.
//!
//! Both variants finish with local-move sweeps at the finest level, so a
//! returned partition is always a local optimum under single-node moves.
//! `leiden-refined` additionally interleaves those sweeps with splitting any
//! community that is not internally connected (splitting a disconnected
//! community never lowers modularity), so its output communities always
//! induce connected subgraphs.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use thiserror::Error;

use crate::graph::WeightedGraph;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("graph has no edges; modularity is undefined")]
    EdgelessGraph,
    #[error("partition is not bound to this graph")]
    PartitionMismatch,
    #[error("invalid detection config: {0}")]
    BadConfig(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which detection variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Louvain,
    LeidenRefined,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Louvain => "louvain",
            Algorithm::LeidenRefined => "leiden-refined",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "louvain" => Ok(Algorithm::Louvain),
            "leiden-refined" => Ok(Algorithm::LeidenRefined),
            other => Err(format!("unknown algorithm {other:?} (expected louvain or leiden-refined)")),
        }
    }
}

/// Parameters for a single detection run.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DetectionConfig {
    /// Resolution multiplier on the null-model term; must be > 0.
    pub gamma: f64,
    /// Seed for the per-run ChaCha8 generator; equal seeds give bitwise
    /// identical partitions.
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Upper bound on local-move/aggregate rounds; must be ≥ 1. The engine
    /// normally stops much earlier, when a round stops making progress.
    pub max_passes: u32,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { gamma: 1.0, seed: 0, algorithm: Algorithm::LeidenRefined, max_passes: 20 }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(DetectError::BadConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.max_passes < 1 {
            return Err(DetectError::BadConfig("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// A node-to-community assignment bound to a specific graph.
///
/// Labels are canonical: community 0 contains node index 0, and labels
/// increase in order of first appearance. Two partitions compare equal iff
/// they group the same graph the same way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    num_communities: u32,
    fingerprint: u64,
}

impl Partition {
    /// Canonicalize `labels` and bind the result to `g`.
    ///
    /// Panics if the label vector length differs from the node count; that
    /// is a programming error, not an input error.
    pub fn from_labels(g: &WeightedGraph, labels: impl Into<Vec<u32>>) -> Partition {
        let mut labels = labels.into();
        assert_eq!(
            labels.len(),
            g.node_count(),
            "partition length must equal the graph's node count"
        );
        let num_communities = canonicalize(&mut labels);
        Partition { labels, num_communities, fingerprint: g.fingerprint() }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn community_of(&self, node: u32) -> u32 {
        self.labels[node as usize]
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities as usize
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_bound_to(&self, g: &WeightedGraph) -> bool {
        self.fingerprint == g.fingerprint() && self.labels.len() == g.node_count()
    }

    /// Fingerprint of the graph this partition was built against.
    pub(crate) fn graph_fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Members of each community, by label; members ascending.
    pub fn communities(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.num_communities as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i as u32);
        }
        out
    }

    /// Write `node_id,community` CSV rows in node order.
    pub fn write_csv<W: Write>(&self, g: &WeightedGraph, out: W) -> Result<(), DetectError> {
        if !self.is_bound_to(g) {
            return Err(DetectError::PartitionMismatch);
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "community"]).map_err(csv_err)?;
        for (i, &l) in self.labels.iter().enumerate() {
            w.write_record([g.node_id(i as u32), &l.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a `node_id,community` CSV covering every node of `g` exactly
    /// once. Labels are re-canonicalized, so files with arbitrary community
    /// numbers load fine.
    pub fn read_csv<R: Read>(g: &WeightedGraph, input: R) -> Result<Partition, DetectError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        {
            let headers = rdr.headers().map_err(csv_err)?;
            if headers.len() != 2 || &headers[0] != "node_id" || &headers[1] != "community" {
                return Err(DetectError::Parse {
                    line: 1,
                    msg: format!("expected header node_id,community, found {headers:?}"),
                });
            }
        }
        let mut labels = vec![u32::MAX; g.node_count()];
        let mut seen = vec![false; g.node_count()];
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let id = record.get(0).unwrap_or_default();
            let raw = record.get(1).unwrap_or_default();
            let node = g.index_of(id).ok_or_else(|| DetectError::Parse {
                line,
                msg: format!("unknown node id {id:?}"),
            })?;
            if seen[node as usize] {
                return Err(DetectError::Parse { line, msg: format!("duplicate row for node {id:?}") });
            }
            seen[node as usize] = true;
            labels[node as usize] = raw.trim().parse::<u32>().map_err(|_| DetectError::Parse {
                line,
                msg: format!("community {raw:?} is not a non-negative integer"),
            })?;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DetectError::Parse {
                line: 0,
                msg: format!("no community row for node {:?}", g.node_id(missing as u32)),
            });
        }
        Ok(Partition::from_labels(g, labels))
    }
}

fn csv_err(e: csv::Error) -> DetectError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return DetectError::Io(io);
        }
        unreachable!()
    }
    let line = e.position().map_or(0, |p| p.line());
    DetectError::Parse { line, msg: e.to_string() }
}

/// Relabel in place to first-appearance order; returns the community count.
pub(crate) fn canonicalize(labels: &mut [u32]) -> u32 {
    let mut map: HashMap<u32, u32> = HashMap::new();
    let mut next = 0u32;
    for l in labels.iter_mut() {
        *l = *map.entry(*l).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        });
    }
    next
}

/// Modularity of `p` on `g` at resolution `gamma`:
/// `sum_c [ w_c / m  -  gamma * (d_c / 2m)^2 ]`, where `w_c` is the weight
/// inside community `c` (each edge once), `d_c` the summed weighted degrees
/// of its members, and `m` the total edge weight.
pub fn modularity(g: &WeightedGraph, p: &Partition, gamma: f64) -> Result<f64, DetectError> {
    if !p.is_bound_to(g) {
        return Err(DetectError::PartitionMismatch);
    }
    if g.edge_count() == 0 {
        return Err(DetectError::EdgelessGraph);
    }
    let m = g.total_weight();
    let k = p.num_communities();
    let mut intra = vec![0.0f64; k];
    let mut deg = vec![0.0f64; k];
    for e in g.edges() {
        if p.labels[e.u as usize] == p.labels[e.v as usize] {
            intra[p.labels[e.u as usize] as usize] += e.weight;
        }
    }
    for (i, &l) in p.labels.iter().enumerate() {
        deg[l as usize] += g.weighted_degree(i as u32);
    }
    let two_m = 2.0 * m;
    let mut q = 0.0;
    for c in 0..k {
        let frac = deg[c] / two_m;
        q += intra[c] / m - gamma * frac * frac;
    }
    Ok(q)
}

/// Run seeded community detection on `g`.
///
/// Same `(graph, config)` always returns the same partition; different seeds
/// explore different greedy trajectories. Errors on an edgeless graph.
/// Isolated nodes come back as singleton communities.
pub fn detect(g: &WeightedGraph, cfg: &DetectionConfig) -> Result<Partition, DetectError> {
    cfg.validate()?;
    if g.edge_count() == 0 {
        return Err(DetectError::EdgelessGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = LevelGraph::from_graph(g);
    let flat = optimize(&base, cfg, &mut rng);
    Ok(Partition::from_labels(g, flat))
}

// Accepting a move needs a strictly positive gain; this margin absorbs
// floating-point noise so near-ties cannot make sweeps cycle forever.
const GAIN_EPS: f64 = 1e-12;
const MAX_SWEEPS: usize = 1_000;
const MAX_POLISH_ROUNDS: usize = 64;

/// Working representation for one aggregation level: plain adjacency plus
/// per-node self-loop weight (intra weight of the collapsed community).
/// `degree` includes twice the self-loop; `m` never changes across levels.
#[derive(Clone)]
struct LevelGraph {
    adj: Vec<Vec<(u32, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
    m: f64,
}

impl LevelGraph {
    fn from_graph(g: &WeightedGraph) -> LevelGraph {
        let n = g.node_count();
        LevelGraph {
            adj: (0..n as u32).map(|i| g.neighbors(i).to_vec()).collect(),
            self_loop: vec![0.0; n],
            degree: (0..n as u32).map(|i| g.weighted_degree(i)).collect(),
            m: g.total_weight(),
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }
}

fn optimize(base: &LevelGraph, cfg: &DetectionConfig, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut flat = descend(base, cfg, rng, None);
    if cfg.algorithm == Algorithm::LeidenRefined {
        // Re-run the whole cycle from the flat partition while it keeps
        // paying off: refinement re-randomizes the aggregation grain, so a
        // fresh descent can pull apart merges an earlier one overshot. A
        // fruitless cycle is discarded rather than ending the search — the
        // next draw may split where this one failed — but only a few in a
        // row, so converged runs don't spin.
        let mut q_prev = flat_quality(base, &flat, cfg.gamma);
        let mut fruitless = 0u32;
        for _ in 1..cfg.max_passes {
            let next = descend(base, cfg, rng, Some(&flat));
            let q = flat_quality(base, &next, cfg.gamma);
            if q > q_prev + GAIN_EPS {
                flat = next;
                q_prev = q;
                fruitless = 0;
            } else {
                fruitless += 1;
                if fruitless >= CYCLE_PATIENCE {
                    break;
                }
            }
        }
    }
    flat
}

/// Consecutive non-improving leiden-refined cycles tolerated before the
/// search settles.
const CYCLE_PATIENCE: u32 = 3;

/// Modularity of a labeling evaluated straight off a level graph.
fn flat_quality(lg: &LevelGraph, labels: &[u32], gamma: f64) -> f64 {
    let n = lg.len();
    let m = lg.m;
    let mut intra2 = vec![0.0f64; n]; // twice the intra edge weight
    let mut deg = vec![0.0f64; n];
    for i in 0..n {
        let c = labels[i] as usize;
        deg[c] += lg.degree[i];
        intra2[c] += 2.0 * lg.self_loop[i];
        for &(j, w) in &lg.adj[i] {
            if labels[j as usize] == labels[i] {
                intra2[c] += w;
            }
        }
    }
    (0..n)
        .map(|c| {
            let half = deg[c] / (2.0 * m);
            intra2[c] / (2.0 * m) - gamma * half * half
        })
        .sum()
}

/// One full multilevel descent: local moves, (for leiden-refined) a
/// refinement pass, aggregation, and recursion, then polish sweeps on the
/// flattened result. `init` seeds the finest level; `None` means singletons.
fn descend(
    base: &LevelGraph,
    cfg: &DetectionConfig,
    rng: &mut ChaCha8Rng,
    init: Option<&[u32]>,
) -> Vec<u32> {
    let gamma = cfg.gamma;
    let mut level = base.clone();
    let mut labels: Vec<u32> = match init {
        Some(seeded) => {
            let mut l = seeded.to_vec();
            canonicalize(&mut l);
            l
        }
        None => (0..level.len() as u32).collect(),
    };
    let mut orig_to_node: Vec<u32> = (0..base.len() as u32).collect();

    for pass in 1..=cfg.max_passes {
        let moved = local_move(&level, &mut labels, rng, gamma);
        if pass == cfg.max_passes || level.len() <= 1 {
            break;
        }
        let (groups, k, init) = match cfg.algorithm {
            Algorithm::Louvain => {
                if !moved {
                    break;
                }
                let mut groups = labels.clone();
                let k = canonicalize(&mut groups);
                (groups, k, (0..k).collect::<Vec<u32>>())
            }
            Algorithm::LeidenRefined => {
                let (blobs, k) = refine(&level, &labels, rng, gamma);
                // Aggregate labels start from the unrefined communities.
                let mut init = vec![u32::MAX; k as usize];
                for (i, &b) in blobs.iter().enumerate() {
                    if init[b as usize] == u32::MAX {
                        init[b as usize] = labels[i];
                    }
                }
                canonicalize(&mut init);
                (blobs, k, init)
            }
        };
        if k as usize == level.len() {
            break; // nothing merged; aggregation would change nothing
        }
        level = aggregate(&level, &groups, k);
        for slot in orig_to_node.iter_mut() {
            *slot = groups[*slot as usize];
        }
        labels = init;
    }

    let mut flat: Vec<u32> = orig_to_node.iter().map(|&x| labels[x as usize]).collect();

    // Final sweeps at the finest level: guarantees the single-node local
    // optimum, and for leiden-refined also connected communities.
    for _ in 0..MAX_POLISH_ROUNDS {
        local_move(base, &mut flat, rng, gamma);
        match cfg.algorithm {
            Algorithm::Louvain => break,
            Algorithm::LeidenRefined => {
                if split_disconnected(base, &mut flat) == 0 {
                    break;
                }
            }
        }
    }
    flat
}

/// Greedy single-node moves, sweeping in seeded random order until a full
/// sweep makes no move. Returns whether anything moved at all.
///
/// The gain of placing node `i` (degree `k_i`) into community `c` after
/// removal from its own is `k_{i,c}/m - gamma * k_i * d_c / (2 m^2)`; the
/// node's self-loop contributes equally everywhere and cancels out.
fn local_move(lg: &LevelGraph, labels: &mut [u32], rng: &mut ChaCha8Rng, gamma: f64) -> bool {
    let n = lg.len();
    let m = lg.m;
    let mut comm_deg = vec![0.0f64; n];
    let mut comm_size = vec![0u32; n];
    for (i, &l) in labels.iter().enumerate() {
        comm_deg[l as usize] += lg.degree[i];
        comm_size[l as usize] += 1;
    }
    // Labels currently holding no node, available as detach targets.
    let mut free: Vec<u32> =
        (0..n as u32).filter(|&l| comm_size[l as usize] == 0).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut w_to = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut any = false;
    for _ in 0..MAX_SWEEPS {
        order.shuffle(rng);
        let mut moves = 0usize;
        for &iu in &order {
            let i = iu as usize;
            let a = labels[i];
            let ki = lg.degree[i];
            touched.clear();
            for &(j, w) in &lg.adj[i] {
                let c = labels[j as usize];
                if w_to[c as usize] == 0.0 {
                    touched.push(c);
                }
                w_to[c as usize] += w;
            }
            let stay = w_to[a as usize] / m
                - gamma * ki * (comm_deg[a as usize] - ki) / (2.0 * m * m);
            // Ascending scan with strict `>` makes ties pick the lowest label.
            touched.sort_unstable();
            let mut best_gain = f64::NEG_INFINITY;
            let mut best = a;
            for &c in &touched {
                if c == a {
                    continue;
                }
                let gain =
                    w_to[c as usize] / m - gamma * ki * comm_deg[c as usize] / (2.0 * m * m);
                if gain > best_gain {
                    best_gain = gain;
                    best = c;
                }
            }
            for &c in &touched {
                w_to[c as usize] = 0.0;
            }
            // An empty community is always reachable with gain exactly 0;
            // it wins only when every occupied candidate has negative gain.
            if best_gain < 0.0 && comm_size[a as usize] > 1 {
                best_gain = 0.0;
                best = *free.last().expect("a shared label frees at least one");
            }
            if best != a && best_gain > stay + GAIN_EPS {
                comm_deg[a as usize] -= ki;
                comm_size[a as usize] -= 1;
                if comm_size[a as usize] == 0 {
                    free.push(a);
                }
                if comm_size[best as usize] == 0 {
                    let popped = free.pop();
                    debug_assert_eq!(popped, Some(best));
                }
                comm_deg[best as usize] += ki;
                comm_size[best as usize] += 1;
                labels[i] = best;
                moves += 1;
            }
        }
        if moves == 0 {
            break;
        }
        any = true;
    }
    any
}

/// Leiden-style refinement: inside each community, grow internally connected
/// sub-communities by letting still-singleton nodes merge (seeded random
/// pick) into an adjacent sub-community with positive modularity gain.
/// Returns dense blob labels and the blob count. Every blob induces a
/// connected subgraph because merges only happen across an edge.
fn refine(lg: &LevelGraph, comm: &[u32], rng: &mut ChaCha8Rng, gamma: f64) -> (Vec<u32>, u32) {
    let n = lg.len();
    let m = lg.m;
    let mut sub: Vec<u32> = (0..n as u32).collect();
    let mut sub_deg = lg.degree.clone();
    let mut sub_size = vec![1u32; n];
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut w_to = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut cands: Vec<u32> = Vec::new();
    for &iu in &order {
        let i = iu as usize;
        if sub_size[sub[i] as usize] > 1 {
            continue;
        }
        let ki = lg.degree[i];
        touched.clear();
        for &(j, w) in &lg.adj[i] {
            let ju = j as usize;
            if comm[ju] != comm[i] || sub[ju] == sub[i] {
                continue;
            }
            let s = sub[ju];
            if w_to[s as usize] == 0.0 {
                touched.push(s);
            }
            w_to[s as usize] += w;
        }
        cands.clear();
        for &s in &touched {
            let gain = w_to[s as usize] / m - gamma * ki * sub_deg[s as usize] / (2.0 * m * m);
            if gain > GAIN_EPS {
                cands.push(s);
            }
        }
        if !cands.is_empty() {
            cands.sort_unstable();
            let pick = cands[rng.gen_range(0..cands.len())];
            let old = sub[i] as usize;
            sub_deg[pick as usize] += ki;
            sub_deg[old] -= ki;
            sub_size[pick as usize] += 1;
            sub_size[old] -= 1;
            sub[i] = pick;
        }
        for &s in &touched {
            w_to[s as usize] = 0.0;
        }
    }
    let k = canonicalize(&mut sub);
    (sub, k)
}

/// Collapse `groups` (dense labels, `k` of them) into a coarser level graph.
/// Intra-group weight moves into self-loops; group degree is the sum of
/// member degrees, so total weight and degree mass are conserved exactly.
fn aggregate(lg: &LevelGraph, groups: &[u32], k: u32) -> LevelGraph {
    let k = k as usize;
    let mut self_loop = vec![0.0f64; k];
    let mut degree = vec![0.0f64; k];
    for i in 0..lg.len() {
        let gi = groups[i] as usize;
        self_loop[gi] += lg.self_loop[i];
        degree[gi] += lg.degree[i];
    }
    let mut cross: HashMap<(u32, u32), f64> = HashMap::new();
    for i in 0..lg.len() {
        let gi = groups[i];
        for &(j, w) in &lg.adj[i] {
            if (j as usize) <= i {
                continue;
            }
            let gj = groups[j as usize];
            if gi == gj {
                self_loop[gi as usize] += w;
            } else {
                let key = if gi < gj { (gi, gj) } else { (gj, gi) };
                *cross.entry(key).or_insert(0.0) += w;
            }
        }
    }
    let mut pairs: Vec<((u32, u32), f64)> = cross.into_iter().collect();
    pairs.sort_unstable_by_key(|p| p.0);
    let mut adj = vec![Vec::new(); k];
    for ((a, b), w) in pairs {
        adj[a as usize].push((b, w));
        adj[b as usize].push((a, w));
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable_by_key(|e| e.0);
    }
    LevelGraph { adj, self_loop, degree, m: lg.m }
}

/// Split every community that does not induce a connected subgraph into its
/// components (which can only raise modularity). Labels are re-compacted.
/// Returns how many extra components were carved off.
fn split_disconnected(lg: &LevelGraph, labels: &mut [u32]) -> usize {
    let n = lg.len();
    let snapshot: Vec<u32> = labels.to_vec();
    let mut next = snapshot.iter().copied().max().map_or(0, |v| v + 1);
    let mut seen = vec![false; n];
    let mut queue: Vec<u32> = Vec::new();
    let mut splits = 0usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // BFS the component of `start` inside its own community.
        let c = snapshot[start];
        let first_of_community = snapshot[..start].iter().all(|&l| l != c);
        let fresh = if first_of_community {
            c // first component keeps the original label
        } else {
            let f = next;
            next += 1;
            splits += 1;
            f
        };
        seen[start] = true;
        labels[start] = fresh;
        queue.clear();
        queue.push(start as u32);
        while let Some(x) = queue.pop() {
            for &(y, _) in &lg.adj[x as usize] {
                let yu = y as usize;
                if !seen[yu] && snapshot[yu] == c {
                    seen[yu] = true;
                    labels[yu] = fresh;
                    queue.push(y);
                }
            }
        }
    }
    canonicalize(labels);
    splits
}

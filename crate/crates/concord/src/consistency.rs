//! Stability metrics computed from a first-iteration consensus matrix: how
//! consistently each edge's endpoints co-cluster, how consistently each node
//! sits inside its community, and a core/fringe classification with
//! per-community descriptives.
//!
//! Everything here reads agreement values only for *adjacent* pairs, so a
//! full and an edge-restricted matrix over the same graph always give the
//! same numbers.

use std::io::Write;

use statrs::distribution::ContinuousCDF;
use thiserror::Error;

use crate::detect::Partition;
use crate::ensemble::ConsensusMatrix;
use crate::graph::WeightedGraph;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("{what} must lie in [0, 1], got {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("thresholds must satisfy 0 <= phi < kappa <= 1, got phi {phi}, kappa {kappa}")]
    BadThresholds { kappa: f64, phi: f64 },
    #[error("consensus matrix is not bound to this graph")]
    MatrixMismatch,
    #[error("partition is not bound to this graph")]
    PartitionMismatch,
    #[error("input vectors must cover every node exactly once")]
    LengthMismatch,
    #[error("need at least {need} nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("graph has no edges")]
    EdgelessGraph,
    #[error("invalid histogram config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Agreement dispersion for one pair: `2·|c − 1/2|`.
///
/// 1 means the runs always agreed about the pair (together or apart,
/// `c ∈ {0, 1}`); 0 means a perfect split (`c = 1/2`).
pub fn pair_consistency(c: f64) -> Result<f64, ConsistencyError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(ConsistencyError::OutOfRange { what: "agreement value", value: c });
    }
    Ok(2.0 * (c - 0.5).abs())
}

/// Thresholds of the node-level analysis.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ConsistencyParams {
    /// An edge counts as consistent when its pair consistency is ≥ theta.
    pub theta: f64,
    /// Core membership: node consistency ≥ kappa.
    pub kappa: f64,
    /// Fringe membership: node consistency < phi.
    pub phi: f64,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        ConsistencyParams { theta: 0.9, kappa: 0.9, phi: 0.5 }
    }
}

impl ConsistencyParams {
    pub fn validate(&self) -> Result<(), ConsistencyError> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(ConsistencyError::OutOfRange { what: "theta", value: self.theta });
        }
        if !(self.phi >= 0.0 && self.phi < self.kappa && self.kappa <= 1.0) {
            return Err(ConsistencyError::BadThresholds { kappa: self.kappa, phi: self.phi });
        }
        Ok(())
    }
}

/// Per-node membership consistency: the fraction of a node's edges whose
/// pair consistency reaches `theta`. Plain edge counts — weights play no
/// role. Nodes without edges score 1.0: nothing contradicts their placement.
pub fn membership_consistency(
    g: &WeightedGraph,
    cm: &ConsensusMatrix,
    theta: f64,
) -> Result<Vec<f64>, ConsistencyError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(ConsistencyError::OutOfRange { what: "theta", value: theta });
    }
    if !cm.is_bound_to(g) {
        return Err(ConsistencyError::MatrixMismatch);
    }
    let mut out = Vec::with_capacity(g.node_count());
    for i in 0..g.node_count() as u32 {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            out.push(1.0);
            continue;
        }
        let hits = nbrs
            .iter()
            .filter(|&&(j, _)| pair_consistency(cm.value(i, j)).expect("c is count/n") >= theta)
            .count();
        out.push(hits as f64 / nbrs.len() as f64);
    }
    Ok(out)
}

/// Node classification by membership consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeClass {
    /// Consistency exactly 1.
    HardCore,
    /// Consistency ≥ kappa (but below 1).
    Core,
    /// Consistency < phi.
    Fringe,
    /// Everything between phi and kappa.
    Other,
}

impl std::fmt::Display for NodeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NodeClass::HardCore => "hard-core",
            NodeClass::Core => "core",
            NodeClass::Fringe => "fringe",
            NodeClass::Other => "other",
        })
    }
}

/// Classify every node: hard-core at exactly 1, core at ≥ kappa, fringe
/// below phi, other in between. Requires `0 ≤ phi < kappa ≤ 1`, which makes
/// the classes mutually exclusive.
pub fn classify_cores(
    consistencies: &[f64],
    kappa: f64,
    phi: f64,
) -> Result<Vec<NodeClass>, ConsistencyError> {
    ConsistencyParams { theta: 0.0, kappa, phi }.validate()?;
    consistencies
        .iter()
        .map(|&s| {
            if !(0.0..=1.0).contains(&s) {
                return Err(ConsistencyError::OutOfRange { what: "consistency", value: s });
            }
            Ok(if s == 1.0 {
                NodeClass::HardCore
            } else if s >= kappa {
                NodeClass::Core
            } else if s < phi {
                NodeClass::Fringe
            } else {
                NodeClass::Other
            })
        })
        .collect()
}

/// One community's descriptive row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CommunitySummary {
    pub community: u32,
    pub size: usize,
    pub mean_consistency: f64,
    /// Nodes with consistency exactly 1.
    pub hard_core_count: usize,
    pub hard_core_fraction: f64,
    /// Nodes at or above kappa — hard-core members included.
    pub core_count: usize,
    pub core_fraction: f64,
    pub fringe_count: usize,
    /// Up to k members with the largest weighted degree; degree ties are
    /// broken by node id.
    pub heaviest: Vec<String>,
}

/// Summarize each community of the partition: size, mean consistency,
/// core/fringe tallies, and its top-`k` heaviest members.
pub fn community_descriptives(
    g: &WeightedGraph,
    partition: &Partition,
    consistencies: &[f64],
    classes: &[NodeClass],
    k: usize,
) -> Result<Vec<CommunitySummary>, ConsistencyError> {
    if !partition.is_bound_to(g) {
        return Err(ConsistencyError::PartitionMismatch);
    }
    if consistencies.len() != g.node_count() || classes.len() != g.node_count() {
        return Err(ConsistencyError::LengthMismatch);
    }
    let mut out = Vec::with_capacity(partition.num_communities());
    for (label, mut members) in partition.communities().into_iter().enumerate() {
        let size = members.len();
        let mean = members.iter().map(|&i| consistencies[i as usize]).sum::<f64>() / size as f64;
        let count_of = |class: NodeClass| {
            members.iter().filter(|&&i| classes[i as usize] == class).count()
        };
        let hard = count_of(NodeClass::HardCore);
        let core = hard + count_of(NodeClass::Core);
        let fringe = count_of(NodeClass::Fringe);
        members.sort_by(|&a, &b| {
            g.weighted_degree(b)
                .partial_cmp(&g.weighted_degree(a))
                .expect("degrees are finite")
                .then_with(|| g.node_id(a).cmp(g.node_id(b)))
        });
        let heaviest = members.iter().take(k).map(|&i| g.node_id(i).to_string()).collect();
        out.push(CommunitySummary {
            community: label as u32,
            size,
            mean_consistency: mean,
            hard_core_count: hard,
            hard_core_fraction: hard as f64 / size as f64,
            core_count: core,
            core_fraction: core as f64 / size as f64,
            fringe_count: fringe,
            heaviest,
        });
    }
    Ok(out)
}

/// One node's row in the report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NodeRow {
    pub node: u32,
    pub community: u32,
    pub weighted_degree: f64,
    pub consistency: f64,
    pub class: NodeClass,
}

/// Full node-level analysis: thresholds, per-node rows, per-community
/// summaries.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConsistencyReport {
    pub params: ConsistencyParams,
    pub nodes: Vec<NodeRow>,
    pub communities: Vec<CommunitySummary>,
}

/// Run the whole node-level analysis in one call.
pub fn analyze(
    g: &WeightedGraph,
    cm: &ConsensusMatrix,
    partition: &Partition,
    params: &ConsistencyParams,
    top_k: usize,
) -> Result<ConsistencyReport, ConsistencyError> {
    params.validate()?;
    let consistencies = membership_consistency(g, cm, params.theta)?;
    let classes = classify_cores(&consistencies, params.kappa, params.phi)?;
    let communities = community_descriptives(g, partition, &consistencies, &classes, top_k)?;
    let nodes = (0..g.node_count() as u32)
        .map(|i| NodeRow {
            node: i,
            community: partition.community_of(i),
            weighted_degree: g.weighted_degree(i),
            consistency: consistencies[i as usize],
            class: classes[i as usize],
        })
        .collect();
    Ok(ConsistencyReport { params: *params, nodes, communities })
}

/// Mean pair consistency over the graph's edges.
pub fn mean_edge_consistency(
    g: &WeightedGraph,
    cm: &ConsensusMatrix,
) -> Result<f64, ConsistencyError> {
    let values = edge_consistencies(g, cm)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Quantiles (linear interpolation between order statistics) of the edge
/// consistency distribution, one per requested probability.
pub fn edge_consistency_quantiles(
    g: &WeightedGraph,
    cm: &ConsensusMatrix,
    probs: &[f64],
) -> Result<Vec<(f64, f64)>, ConsistencyError> {
    let mut values = edge_consistencies(g, cm)?;
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("consistencies are finite"));
    probs
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConsistencyError::OutOfRange { what: "quantile", value: p });
            }
            let h = (values.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            Ok((p, values[lo] + (h - lo as f64) * (values[hi] - values[lo])))
        })
        .collect()
}

fn edge_consistencies(
    g: &WeightedGraph,
    cm: &ConsensusMatrix,
) -> Result<Vec<f64>, ConsistencyError> {
    if !cm.is_bound_to(g) {
        return Err(ConsistencyError::MatrixMismatch);
    }
    if g.edge_count() == 0 {
        return Err(ConsistencyError::EdgelessGraph);
    }
    Ok(g.edges()
        .iter()
        .map(|e| pair_consistency(cm.value(e.u, e.v)).expect("c is count/n"))
        .collect())
}

/// Ranks with ties sharing their average position (1-based).
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("ranks need finite values"));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &idx[i..=j] {
            ranks[slot] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank ties. `None` when either
/// vector is constant (or shorter than 2), where ranks carry no signal.
///
/// Without ties this uses the exact rank-difference formula, so perfectly
/// monotone inputs give exactly ±1.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired observations");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let tied = |r: &[f64]| r.iter().any(|v| v.fract() != 0.0) || {
        let mut s: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
        s.sort_unstable();
        s.windows(2).any(|w| w[0] == w[1])
    };
    if !tied(&rx) && !tied(&ry) {
        let sum_d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
        let nf = n as f64;
        return Some(1.0 - 6.0 * sum_d2 / (nf * (nf * nf - 1.0)));
    }
    let mean = |r: &[f64]| r.iter().sum::<f64>() / r.len() as f64;
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value for a Spearman coefficient via the large-sample t
/// approximation with n − 2 degrees of freedom. `None` below 3 observations.
pub fn spearman_p_value(rho: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let df = (n - 2) as f64;
    if rho * rho >= 1.0 {
        return Some(0.0);
    }
    let t = rho.abs() * (df / (1.0 - rho * rho)).sqrt();
    let dist = statrs::distribution::StudentsT::new(0.0, 1.0, df).ok()?;
    Some(2.0 * (1.0 - dist.cdf(t)))
}

/// One cell of the degree-versus-consistency histogram.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HistogramBin {
    pub degree_low: f64,
    pub degree_high: f64,
    pub consistency_low: f64,
    pub consistency_high: f64,
    pub count: usize,
}

/// Correlation between weighted degree and membership consistency.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorrelationReport {
    /// `None` when one of the vectors is constant.
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub nodes: usize,
    #[serde(skip)]
    pub bins: Vec<HistogramBin>,
}

/// Spearman correlation of weighted degree against consistency, plus a 2D
/// histogram (log-spaced degree bins, linear consistency bins over [0, 1])
/// for plotting. Needs at least 3 nodes for the p-value to mean anything.
pub fn consistency_degree_correlation(
    g: &WeightedGraph,
    consistencies: &[f64],
    degree_bins: usize,
    consistency_bins: usize,
) -> Result<CorrelationReport, ConsistencyError> {
    if consistencies.len() != g.node_count() {
        return Err(ConsistencyError::LengthMismatch);
    }
    if g.node_count() < 3 {
        return Err(ConsistencyError::TooFewNodes { need: 3, got: g.node_count() });
    }
    if degree_bins == 0 || consistency_bins == 0 {
        return Err(ConsistencyError::BadConfig("bin counts must be positive".into()));
    }
    let degrees: Vec<f64> = (0..g.node_count() as u32).map(|i| g.weighted_degree(i)).collect();
    let rho = spearman(&degrees, consistencies);
    let p_value = rho.and_then(|r| spearman_p_value(r, degrees.len()));

    // Degree edges: log-spaced from the smallest positive degree to the
    // maximum. Zero degrees land in the first bin, whose lower edge is then
    // reported as 0.
    let max = degrees.iter().cloned().fold(0.0, f64::max);
    let min_pos = degrees.iter().cloned().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let has_zero = degrees.iter().any(|&d| d == 0.0);
    let degree_edges: Vec<f64> = if !min_pos.is_finite() {
        vec![0.0, 0.0] // all nodes isolated: one degenerate bin
    } else if min_pos == max {
        vec![if has_zero { 0.0 } else { min_pos }, max]
    } else {
        let (lo, hi) = (min_pos.ln(), max.ln());
        let mut edges: Vec<f64> = (0..=degree_bins)
            .map(|k| (lo + (hi - lo) * k as f64 / degree_bins as f64).exp())
            .collect();
        edges[0] = if has_zero { 0.0 } else { min_pos };
        edges[degree_bins] = max;
        edges
    };
    let d_bins = degree_edges.len() - 1;
    let locate = |edges: &[f64], v: f64| -> usize {
        let inner = &edges[1..edges.len() - 1];
        inner.partition_point(|&e| e <= v)
    };
    let mut counts = vec![0usize; d_bins * consistency_bins];
    for (&d, &s) in degrees.iter().zip(consistencies) {
        if !(0.0..=1.0).contains(&s) {
            return Err(ConsistencyError::OutOfRange { what: "consistency", value: s });
        }
        let di = locate(&degree_edges, d);
        let si = ((s * consistency_bins as f64) as usize).min(consistency_bins - 1);
        counts[di * consistency_bins + si] += 1;
    }
    let mut bins = Vec::with_capacity(counts.len());
    for di in 0..d_bins {
        for si in 0..consistency_bins {
            bins.push(HistogramBin {
                degree_low: degree_edges[di],
                degree_high: degree_edges[di + 1],
                consistency_low: si as f64 / consistency_bins as f64,
                consistency_high: (si + 1) as f64 / consistency_bins as f64,
                count: counts[di * consistency_bins + si],
            });
        }
    }
    Ok(CorrelationReport { rho, p_value, nodes: g.node_count(), bins })
}

/// Write `node_id,community,weighted_degree,consistency,classification`
/// rows in node order.
pub fn write_node_report_csv<W: Write>(
    g: &WeightedGraph,
    report: &ConsistencyReport,
    out: W,
) -> Result<(), ConsistencyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "community", "weighted_degree", "consistency", "classification"])
        .map_err(io_err)?;
    for row in &report.nodes {
        w.write_record([
            g.node_id(row.node),
            &row.community.to_string(),
            &format!("{}", row.weighted_degree),
            &format!("{}", row.consistency),
            &row.class.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write one row per community; heaviest members joined with `;`.
pub fn write_community_summary_csv<W: Write>(
    report: &ConsistencyReport,
    out: W,
) -> Result<(), ConsistencyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "community",
        "size",
        "mean_consistency",
        "hard_core_count",
        "hard_core_fraction",
        "core_count",
        "core_fraction",
        "fringe_count",
        "heaviest_nodes",
    ])
    .map_err(io_err)?;
    for c in &report.communities {
        w.write_record([
            &c.community.to_string(),
            &c.size.to_string(),
            &format!("{}", c.mean_consistency),
            &c.hard_core_count.to_string(),
            &format!("{}", c.hard_core_fraction),
            &c.core_count.to_string(),
            &format!("{}", c.core_fraction),
            &c.fringe_count.to_string(),
            &c.heaviest.join(";"),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the 2D histogram:
/// `degree_bin_low,degree_bin_high,consistency_bin_low,consistency_bin_high,count`.
pub fn write_histogram_csv<W: Write>(
    report: &CorrelationReport,
    out: W,
) -> Result<(), ConsistencyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "degree_bin_low",
        "degree_bin_high",
        "consistency_bin_low",
        "consistency_bin_high",
        "count",
    ])
    .map_err(io_err)?;
    for b in &report.bins {
        w.write_record([
            &format!("{}", b.degree_low),
            &format!("{}", b.degree_high),
            &format!("{}", b.consistency_low),
            &format!("{}", b.consistency_high),
            &b.count.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(e: csv::Error) -> ConsistencyError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ConsistencyError::Io(io),
        other => ConsistencyError::Io(std::io::Error::other(format!("csv: {other:?}"))),
    }
}

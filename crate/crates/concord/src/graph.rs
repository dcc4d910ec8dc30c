//! Weighted undirected graphs over opaque string node ids.
//!
//! Graphs are immutable once built. Construction enforces the invariants the
//! rest of the crate leans on: node indices are dense and ordered by first
//! appearance, edges are stored once with `u < v` sorted by `(u, v)`,
//! duplicate input pairs are merged by weight summation, self-loops are
//! dropped (and counted), and every stored weight is finite and positive.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("input contains no edge records")]
    EmptyInput,
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("edge endpoint index {index} out of range for {nodes} nodes")]
    BadEndpoint { index: u32, nodes: u32 },
    #[error("edge {u:?}-{v:?} has non-positive or non-finite weight {weight}")]
    BadWeight { u: String, v: String, weight: f64 },
    #[error("node {node:?} has no value for attribute {key:?}")]
    MissingAttribute { node: String, key: String },
    #[error("node id {0:?} cannot be written in edge-list format")]
    UnwritableId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One undirected edge; `u < v` always holds for stored edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub weight: f64,
}

/// What construction had to clean up: useful for logging and for checking
/// weight conservation around transformations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub self_loop_weight_dropped: f64,
    pub duplicate_pairs_merged: usize,
}

/// Immutable weighted undirected graph.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(u32, f64)>>,
    weighted_degree: Vec<f64>,
    total_weight: f64,
    attrs: Vec<BTreeMap<String, String>>,
    fingerprint: u64,
}

/// Basic size and density numbers.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    /// 2|E| / |V|; 0 for the empty graph.
    pub mean_degree: f64,
    /// Mean of weighted degrees, i.e. 2 * total weight / |V|.
    pub mean_weighted_degree: f64,
}

impl WeightedGraph {
    /// Build a graph from an explicit node list and index-based edges.
    ///
    /// Node order is exactly `ids`; nodes that appear in no edge are kept as
    /// isolated vertices. Self-loops are dropped and counted, duplicate
    /// pairs merged by summation.
    pub fn build(
        ids: Vec<String>,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<(Self, LoadReport), GraphError> {
        let n = ids.len() as u32;
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(GraphError::DuplicateId(id.clone()));
            }
        }
        let mut report = LoadReport::default();
        let mut merged: HashMap<(u32, u32), f64> = HashMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(GraphError::BadEndpoint { index: u.max(v), nodes: n });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight {
                    u: ids[u as usize].clone(),
                    v: ids[v as usize].clone(),
                    weight: w,
                });
            }
            if u == v {
                report.self_loops_dropped += 1;
                report.self_loop_weight_dropped += w;
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if let Some(slot) = merged.get_mut(&key) {
                *slot += w;
                report.duplicate_pairs_merged += 1;
            } else {
                merged.insert(key, w);
            }
        }
        let mut edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();
        edges.sort_unstable_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));

        let mut adj = vec![Vec::new(); ids.len()];
        let mut weighted_degree = vec![0.0; ids.len()];
        let mut total_weight = 0.0;
        for e in &edges {
            adj[e.u as usize].push((e.v, e.weight));
            adj[e.v as usize].push((e.u, e.weight));
            weighted_degree[e.u as usize] += e.weight;
            weighted_degree[e.v as usize] += e.weight;
            total_weight += e.weight;
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        let fingerprint = fingerprint_of(&ids, &edges);
        let attrs = vec![BTreeMap::new(); ids.len()];
        Ok((
            WeightedGraph { ids, index, edges, adj, weighted_degree, total_weight, attrs, fingerprint },
            report,
        ))
    }

    /// Build from `(source_id, target_id, weight)` triples. Node indices are
    /// assigned by first appearance, source before target. Errors on an
    /// empty edge iterator: a graph must come from at least one record.
    pub fn from_edges<S: Into<String>>(
        triples: impl IntoIterator<Item = (S, S, f64)>,
    ) -> Result<(Self, LoadReport), GraphError> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        let intern = |id: String, ids: &mut Vec<String>, index: &mut HashMap<String, u32>| -> u32 {
            if let Some(&i) = index.get(&id) {
                return i;
            }
            let i = ids.len() as u32;
            index.insert(id.clone(), i);
            ids.push(id);
            i
        };
        for (s, t, w) in triples {
            let u = intern(s.into(), &mut ids, &mut index);
            let v = intern(t.into(), &mut ids, &mut index);
            edges.push((u, v, w));
        }
        if ids.is_empty() {
            return Err(GraphError::EmptyInput);
        }
        Self::build(ids, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of all edge weights (each undirected edge counted once).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_id(&self, i: u32) -> &str {
        &self.ids[i as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    /// Edges sorted by `(u, v)`, each pair present once with `u < v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `i` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, i: u32) -> &[(u32, f64)] {
        &self.adj[i as usize]
    }

    pub fn degree(&self, i: u32) -> usize {
        self.adj[i as usize].len()
    }

    pub fn weighted_degree(&self, i: u32) -> f64 {
        self.weighted_degree[i as usize]
    }

    /// Structural hash binding partitions and consensus matrices to the
    /// graph they were computed on. Covers ids and weighted edges, not
    /// attributes.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn attribute(&self, i: u32, key: &str) -> Option<&str> {
        self.attrs[i as usize].get(key).map(String::as_str)
    }

    /// Attach attribute rows to matching nodes. Table entries for ids not in
    /// the graph are ignored (attribute files routinely cover more nodes
    /// than the analyzed subgraph). Returns how many nodes were annotated.
    pub fn attach_attributes(&mut self, table: &AttributeTable) -> usize {
        let mut hit = 0;
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(kv) = table.0.get(id) {
                self.attrs[i].extend(kv.iter().map(|(k, v)| (k.clone(), v.clone())));
                hit += 1;
            }
        }
        hit
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.node_count();
        if n == 0 {
            return GraphStats { nodes: 0, edges: 0, mean_degree: 0.0, mean_weighted_degree: 0.0 };
        }
        GraphStats {
            nodes: n,
            edges: self.edge_count(),
            mean_degree: 2.0 * self.edge_count() as f64 / n as f64,
            mean_weighted_degree: 2.0 * self.total_weight / n as f64,
        }
    }

    /// The induced subgraph on the largest connected component.
    ///
    /// Ties on size go to the component containing the smallest node index.
    /// Node order, ids and attributes are preserved, so applying this twice
    /// returns an identical graph.
    pub fn largest_connected_component(&self) -> WeightedGraph {
        let n = self.node_count();
        let mut comp = vec![u32::MAX; n];
        let mut best: (usize, u32) = (0, 0); // (size, component id)
        let mut num = 0u32;
        let mut queue = Vec::new();
        for start in 0..n {
            if comp[start] != u32::MAX {
                continue;
            }
            let c = num;
            num += 1;
            comp[start] = c;
            queue.clear();
            queue.push(start as u32);
            let mut size = 0usize;
            while let Some(x) = queue.pop() {
                size += 1;
                for &(y, _) in &self.adj[x as usize] {
                    if comp[y as usize] == u32::MAX {
                        comp[y as usize] = c;
                        queue.push(y);
                    }
                }
            }
            // Strictly-greater keeps the earliest (smallest-min-index)
            // component on ties.
            if size > best.0 {
                best = (size, c);
            }
        }
        self.induced(|i| comp[i as usize] == best.1)
    }

    fn induced(&self, keep: impl Fn(u32) -> bool) -> WeightedGraph {
        let mut remap = vec![u32::MAX; self.node_count()];
        let mut ids = Vec::new();
        let mut attrs = Vec::new();
        for i in 0..self.node_count() as u32 {
            if keep(i) {
                remap[i as usize] = ids.len() as u32;
                ids.push(self.ids[i as usize].clone());
                attrs.push(self.attrs[i as usize].clone());
            }
        }
        let edges = self.edges.iter().filter_map(|e| {
            let (u, v) = (remap[e.u as usize], remap[e.v as usize]);
            (u != u32::MAX && v != u32::MAX).then_some((u, v, e.weight))
        });
        let (mut g, _) = WeightedGraph::build(ids, edges)
            .expect("induced subgraph of a valid graph is valid");
        g.attrs = attrs;
        g
    }

    /// Collapse nodes sharing a value of `key` into one node per value.
    ///
    /// Group node ids are the attribute values, ordered by first appearance
    /// over node indices. Edge weights between groups are summed; weights
    /// inside a group become self-loops and are dropped — the second return
    /// value reports how much weight that removed. Errors if any node lacks
    /// the attribute.
    pub fn aggregate_by_attribute(&self, key: &str) -> Result<(WeightedGraph, f64), GraphError> {
        let mut group_of = Vec::with_capacity(self.node_count());
        let mut group_ids: Vec<String> = Vec::new();
        let mut group_index: HashMap<&str, u32> = HashMap::new();
        for (i, id) in self.ids.iter().enumerate() {
            let value = self.attrs[i].get(key).ok_or_else(|| GraphError::MissingAttribute {
                node: id.clone(),
                key: key.to_string(),
            })?;
            let g = match group_index.get(value.as_str()) {
                Some(&g) => g,
                None => {
                    let g = group_ids.len() as u32;
                    group_index.insert(value, g);
                    group_ids.push(value.clone());
                    g
                }
            };
            group_of.push(g);
        }
        let key_owned = key.to_string();
        let edges = self
            .edges
            .iter()
            .map(|e| (group_of[e.u as usize], group_of[e.v as usize], e.weight));
        let group_names = group_ids.clone();
        let (mut agg, report) = WeightedGraph::build(group_ids, edges)?;
        for (i, name) in group_names.into_iter().enumerate() {
            agg.attrs[i].insert(key_owned.clone(), name);
        }
        Ok((agg, report.self_loop_weight_dropped))
    }

    /// Serialize as tab-separated `src\tdst\tweight` lines, edges in stored
    /// order. Errors if an id cannot survive a round-trip (embedded tab,
    /// newline, or a leading comment character).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), GraphError> {
        let mut line = String::new();
        for e in &self.edges {
            let (u, v) = (self.node_id(e.u), self.node_id(e.v));
            for id in [u, v] {
                if id.is_empty() || id.contains(['\t', '\n', '\r']) || id.starts_with('#') {
                    return Err(GraphError::UnwritableId(id.to_string()));
                }
            }
            line.clear();
            let _ = write!(line, "{u}\t{v}\t{w}\n", w = e.weight);
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

fn fingerprint_of(ids: &[String], edges: &[Edge]) -> u64 {
    // FNV-1a, hand-rolled so the value is stable across Rust versions.
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&(ids.len() as u64).to_le_bytes());
    for id in ids {
        eat(&(id.len() as u64).to_le_bytes());
        eat(id.as_bytes());
    }
    eat(&(edges.len() as u64).to_le_bytes());
    for e in edges {
        eat(&e.u.to_le_bytes());
        eat(&e.v.to_le_bytes());
        eat(&e.weight.to_bits().to_le_bytes());
    }
    h
}

/// Edge-list dialect accepted by [`load_edge_list`].
#[derive(Debug, Clone, Copy)]
pub struct EdgeListFormat {
    /// Field separator; tab by default.
    pub delimiter: u8,
    /// Lines starting with this byte are skipped.
    pub comment: u8,
    /// Weight assigned to two-field records.
    pub default_weight: f64,
}

impl Default for EdgeListFormat {
    fn default() -> Self {
        EdgeListFormat { delimiter: b'\t', comment: b'#', default_weight: 1.0 }
    }
}

/// Parse an edge list: one `source<sep>target[<sep>weight]` record per line.
///
/// Blank lines and comment lines are skipped. Weights must parse as finite
/// numbers > 0; malformed records are rejected with their 1-based line
/// number. An input with no records at all is an error.
pub fn load_edge_list<R: BufRead>(
    mut reader: R,
    format: &EdgeListFormat,
) -> Result<(WeightedGraph, LoadReport), GraphError> {
    let mut triples: Vec<(String, String, f64)> = Vec::new();
    let mut buf: Vec<u8> = Vec::new();
    let mut line_no: u64 = 0;
    loop {
        buf.clear();
        let read = reader.read_until(b'\n', &mut buf)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        if buf.is_empty() || buf.iter().all(|b| b.is_ascii_whitespace()) {
            continue;
        }
        if buf[0] == format.comment {
            continue;
        }
        let line = std::str::from_utf8(&buf).map_err(|_| GraphError::Parse {
            line: line_no,
            msg: "invalid UTF-8".into(),
        })?;
        let fields: Vec<&str> = line.split(format.delimiter as char).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected 2 or 3 fields, found {}", fields.len()),
            });
        }
        let (src, dst) = (fields[0], fields[1]);
        if src.is_empty() || dst.is_empty() {
            return Err(GraphError::Parse { line: line_no, msg: "empty node id".into() });
        }
        let weight = match fields.get(2) {
            None => format.default_weight,
            Some(raw) => raw.trim().parse::<f64>().map_err(|_| GraphError::Parse {
                line: line_no,
                msg: format!("weight {raw:?} is not a number"),
            })?,
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("weight must be finite and > 0, got {weight}"),
            });
        }
        triples.push((src.to_string(), dst.to_string(), weight));
    }
    if triples.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    WeightedGraph::from_edges(triples)
}

/// Node attributes keyed by node id, loaded from CSV.
#[derive(Debug, Clone, Default)]
pub struct AttributeTable(HashMap<String, BTreeMap<String, String>>);

impl AttributeTable {
    pub fn get(&self, node_id: &str, key: &str) -> Option<&str> {
        self.0.get(node_id).and_then(|kv| kv.get(key)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Parse a `node_id,attr_key,attr_value` CSV (header required).
///
/// Duplicate `(node, key)` rows are rejected — silently keeping one of two
/// conflicting values has burned enough pipelines.
pub fn load_attributes<R: Read>(reader: R) -> Result<AttributeTable, GraphError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    {
        let headers = rdr.headers().map_err(csv_err)?;
        let expect = ["node_id", "attr_key", "attr_value"];
        if headers.len() != 3 || headers.iter().zip(expect).any(|(h, e)| h != e) {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("expected header node_id,attr_key,attr_value, found {headers:?}"),
            });
        }
    }
    let mut table: HashMap<String, BTreeMap<String, String>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let node = record.get(0).unwrap_or_default();
        let key = record.get(1).unwrap_or_default();
        let value = record.get(2).unwrap_or_default();
        if node.is_empty() || key.is_empty() {
            return Err(GraphError::Parse { line, msg: "empty node_id or attr_key".into() });
        }
        let kv = table.entry(node.to_string()).or_default();
        if kv.insert(key.to_string(), value.to_string()).is_some() {
            return Err(GraphError::Parse {
                line,
                msg: format!("duplicate attribute {key:?} for node {node:?}"),
            });
        }
    }
    Ok(AttributeTable(table))
}

fn csv_err(e: csv::Error) -> GraphError {
    let line = e.position().map_or(0, |p| p.line());
    GraphError::Parse { line, msg: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_from(text: &str) -> (WeightedGraph, LoadReport) {
        load_edge_list(text.as_bytes(), &EdgeListFormat::default()).unwrap()
    }

    #[test]
    fn duplicate_pairs_merge_regardless_of_direction() {
        let (g, report) = graph_from("a\tb\t2\nb\ta\t3\n");
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].weight, 5.0);
        assert_eq!(report.duplicate_pairs_merged, 1);
    }

    #[test]
    fn self_loops_are_dropped_and_counted() {
        let (g, report) = graph_from("a\ta\t5\n");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(report.self_loops_dropped, 1);
        assert_eq!(report.self_loop_weight_dropped, 5.0);
    }

    #[test]
    fn comments_blanks_and_default_weights() {
        let (g, _) = graph_from("# a header comment\n\na\tb\n  \nb\tc\t2.5\r\n");
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let ab = g.edges()[0];
        assert_eq!((ab.u, ab.v, ab.weight), (0, 1, 1.0));
        assert_eq!(g.node_id(0), "a");
        assert_eq!(g.weighted_degree(1), 3.5);
    }

    #[test]
    fn node_order_is_first_appearance() {
        let (g, _) = graph_from("x\ty\nz\tx\n");
        let ids: Vec<_> = g.ids().iter().map(String::as_str).collect();
        assert_eq!(ids, ["x", "y", "z"]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load_edge_list("a\tb\na\tb\theavy\n".as_bytes(), &EdgeListFormat::default())
            .unwrap_err();
        match err {
            GraphError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("heavy"), "{msg}");
            }
            other => panic!("wrong error: {other}"),
        }
        for bad in ["a\n", "a\tb\t1\tx\n", "a\tb\t0\n", "a\tb\t-1\n", "a\tb\tNaN\n", "a\tb\tinf\n"] {
            assert!(matches!(
                load_edge_list(bad.as_bytes(), &EdgeListFormat::default()),
                Err(GraphError::Parse { line: 1, .. })
            ), "{bad:?} should fail on line 1");
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        for text in ["", "# only comments\n", "\n\n"] {
            assert!(matches!(
                load_edge_list(text.as_bytes(), &EdgeListFormat::default()),
                Err(GraphError::EmptyInput)
            ));
        }
    }

    #[test]
    fn invalid_utf8_is_a_parse_error() {
        let bytes: &[u8] = b"a\tb\t1\n\xff\xfe\tb\t1\n";
        assert!(matches!(
            load_edge_list(bytes, &EdgeListFormat::default()),
            Err(GraphError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn stats_match_definitions() {
        let (g, _) = graph_from("a\tb\t2\nb\tc\t4\n");
        let s = g.stats();
        assert_eq!(s.nodes, 3);
        assert_eq!(s.edges, 2);
        assert!((s.mean_degree - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.mean_weighted_degree - 12.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lcc_picks_largest_then_smallest_min_index() {
        // Components: {a,b}, {c,d,e}, {f,g}.
        let (g, _) = graph_from("a\tb\nc\td\nd\te\nf\tg\n");
        let lcc = g.largest_connected_component();
        let ids: Vec<_> = lcc.ids().iter().map(String::as_str).collect();
        assert_eq!(ids, ["c", "d", "e"]);
        // Tie between {a,b} and {f,g} goes to {a,b}.
        let (g2, _) = graph_from("a\tb\nf\tg\n");
        let lcc2 = g2.largest_connected_component();
        let ids2: Vec<_> = lcc2.ids().iter().map(String::as_str).collect();
        assert_eq!(ids2, ["a", "b"]);
    }

    #[test]
    fn lcc_is_idempotent() {
        let (g, _) = graph_from("a\tb\nb\tc\nd\te\n");
        let once = g.largest_connected_component();
        let twice = once.largest_connected_component();
        assert_eq!(once.ids(), twice.ids());
        assert_eq!(once.edges(), twice.edges());
        assert_eq!(once.fingerprint(), twice.fingerprint());
    }

    #[test]
    fn attributes_load_and_attach() {
        let (mut g, _) = graph_from("a\tb\nb\tc\n");
        let table = load_attributes(
            "node_id,attr_key,attr_value\na,country,NL\nb,country,BE\nc,country,NL\nzz,country,XX\n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(g.attach_attributes(&table), 3);
        assert_eq!(g.attribute(0, "country"), Some("NL"));
        assert_eq!(g.attribute(2, "country"), Some("NL"));
    }

    #[test]
    fn attribute_header_and_duplicates_are_validated() {
        assert!(matches!(
            load_attributes("id,key,value\na,x,1\n".as_bytes()),
            Err(GraphError::Parse { line: 1, .. })
        ));
        let err = load_attributes(
            "node_id,attr_key,attr_value\na,x,1\na,x,2\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn aggregate_sums_groups_and_reports_dropped_weight() {
        let (mut g, _) = graph_from("a\tb\t1\na\tc\t2\nb\tc\t4\nc\td\t8\n");
        let table = load_attributes(
            "node_id,attr_key,attr_value\na,side,L\nb,side,L\nc,side,R\nd,side,R\n".as_bytes(),
        )
        .unwrap();
        g.attach_attributes(&table);
        let (agg, dropped) = g.aggregate_by_attribute("side").unwrap();
        // a-b (1) and c-d (8) become intra-group weight and vanish.
        assert_eq!(dropped, 9.0);
        assert_eq!(agg.node_count(), 2);
        assert_eq!(agg.edge_count(), 1);
        assert_eq!(agg.edges()[0].weight, 6.0);
        let ids: Vec<_> = agg.ids().iter().map(String::as_str).collect();
        assert_eq!(ids, ["L", "R"]);
        // Conservation: aggregated weight + dropped weight = original weight.
        assert!((agg.total_weight() + dropped - g.total_weight()).abs() < 1e-12);
        // Groups keep the attribute they were formed from.
        assert_eq!(agg.attribute(0, "side"), Some("L"));
    }

    #[test]
    fn aggregate_missing_attribute_names_the_node() {
        let (mut g, _) = graph_from("a\tb\nb\tc\n");
        let table =
            load_attributes("node_id,attr_key,attr_value\na,side,L\nc,side,R\n".as_bytes()).unwrap();
        g.attach_attributes(&table);
        match g.aggregate_by_attribute("side") {
            Err(GraphError::MissingAttribute { node, key }) => {
                assert_eq!(node, "b");
                assert_eq!(key, "side");
            }
            other => panic!("expected MissingAttribute, got {other:?}"),
        }
    }

    #[test]
    fn fingerprint_tracks_structure() {
        let (g1, _) = graph_from("a\tb\t1\nb\tc\t2\n");
        let (g2, _) = graph_from("a\tb\t1\nb\tc\t2\n");
        let (g3, _) = graph_from("a\tb\t1\nb\tc\t2.000001\n");
        assert_eq!(g1.fingerprint(), g2.fingerprint());
        assert_ne!(g1.fingerprint(), g3.fingerprint());
    }

    #[test]
    fn edge_list_round_trips() {
        let (g, _) = graph_from("a\tb\t1.5\nb\tc\t0.25\na\tc\t3\n");
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        let (back, _) = load_edge_list(out.as_slice(), &EdgeListFormat::default()).unwrap();
        assert_eq!(back.fingerprint(), g.fingerprint());
    }

    #[test]
    fn isolated_nodes_survive_build() {
        let (g, _) = WeightedGraph::build(
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0u32, 1u32, 1.0)],
        )
        .unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.degree(2), 0);
        assert_eq!(g.weighted_degree(2), 0.0);
    }
}

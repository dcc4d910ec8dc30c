//! Consensus community detection and partition-stability analysis for
//! weighted undirected graphs.
//!
//! Community detection with randomized greedy optimizers is seed-sensitive:
//! rerunning the same algorithm can regroup nodes differently. This crate
//! treats that instability as signal. It runs an ensemble of seeded
//! detections, distills them into a single consensus partition by iterated
//! thresholding of the co-clustering matrix, and then scores every edge and
//! node by how consistently the ensemble agreed about it — separating the
//! stable core of each community from its fringe.
//!
//! The modules follow the pipeline:
//!
//! * [`graph`] — edge-list / attribute parsing, weighted graphs, grouping.
//! * [`detect`] — modularity and seeded detection (`louvain` or the
//!   refinement variant `leiden-refined` with connected communities).
//! * [`ensemble`] — ensembles, consensus matrices, iterated consensus
//!   clustering, threshold sweeps.
//! * [`compare`] — normalized mutual information between partitions.
//! * [`consistency`] — edge/node consistency, core–fringe classification,
//!   descriptives, degree correlation.
//!
//! ```
//! use concord::detect::modularity;
//! use concord::ensemble::{consensus_cluster, ConsensusConfig};
//! use concord::graph::{load_edge_list, EdgeListFormat};
//!
//! // Two triangles joined by one bridge edge.
//! let tsv = "a\tb\nb\tc\na\tc\nd\te\ne\tf\nd\tf\nc\td\n";
//! let (g, _) = load_edge_list(tsv.as_bytes(), &EdgeListFormat::default())?;
//!
//! let cfg = ConsensusConfig { n_runs: 16, ..Default::default() };
//! let out = consensus_cluster(&g, &cfg, 7)?;
//!
//! // Every seed finds the triangles, so consensus lands in one iteration.
//! assert_eq!(out.iterations, 1);
//! assert_eq!(out.partition.labels(), &[0, 0, 0, 1, 1, 1]);
//! let q = modularity(&g, &out.partition, 1.0)?;
//! assert!((q - 5.0 / 14.0).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod compare;
pub mod consistency;
pub mod detect;
pub mod ensemble;
pub mod graph;

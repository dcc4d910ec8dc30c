//! Command implementations and the exit-code-carrying error type.
//!
//! Every file-writing command drops a `run.json` sidecar into the output
//! directory recording the resolved configuration and the artifact list, so
//! a run can be replayed exactly. Nothing here embeds timestamps or absolute
//! paths: rerunning the same invocation rewrites byte-identical files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use concord::compare::{consensus_nmi, ensemble_nmi, nmi_of_labelings, NmiNormalization};
use concord::consistency::{
    analyze, consistency_degree_correlation, edge_consistency_quantiles, mean_edge_consistency,
    write_community_summary_csv, write_histogram_csv, write_node_report_csv, ConsistencyError,
    ConsistencyParams, NodeClass,
};
use concord::detect::{
    detect as run_detection, modularity, DetectError, DetectionConfig, Partition,
};
use concord::ensemble::{
    consensus_cluster, tau_sweep, ConsensusConfig, ConsensusMatrix, ConsensusMode, EnsembleError,
    EnsembleResult,
};
use concord::graph::{load_attributes, load_edge_list, EdgeListFormat, GraphError, WeightedGraph};

use crate::{
    AggregateArgs, ConsensusArgs, ConsistencyArgs, DetectArgs, EnsembleArgs, InputArgs, ModeArg,
    NmiArgs, NormArg, OutArgs, StatsArgs,
};

/// Above this many edges, `--mode auto` switches the consensus matrix to
/// edge-restricted storage; the full matrix can approach quadratic memory.
const AUTO_MODE_EDGE_LIMIT: usize = 100_000;

const QUANTILE_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed data (exit 2).
    #[error("{0}")]
    Data(String),
    /// Numeric failure, i.e. non-convergence (exit 3).
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::BadConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::TooFewRuns(_)
            | EnsembleError::BadThreshold(_)
            | EnsembleError::BadConfig(_) => CliError::Usage(e.to_string()),
            EnsembleError::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            EnsembleError::Detect(d) => d.into(),
            EnsembleError::Graph(g) => g.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ConsistencyError> for CliError {
    fn from(e: ConsistencyError) -> Self {
        match e {
            ConsistencyError::OutOfRange { .. }
            | ConsistencyError::BadThresholds { .. }
            | ConsistencyError::BadConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

// ---- shared plumbing -------------------------------------------------------

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_graph(args: &InputArgs) -> Result<WeightedGraph, CliError> {
    let (mut g, report) = load_edge_list(open(&args.input)?, &EdgeListFormat::default())?;
    if report.self_loops_dropped > 0 {
        eprintln!(
            "warning: dropped {} self-loop(s) totalling weight {}",
            report.self_loops_dropped, report.self_loop_weight_dropped
        );
    }
    if report.duplicate_pairs_merged > 0 {
        eprintln!(
            "warning: merged {} duplicate edge record(s) by summing weights",
            report.duplicate_pairs_merged
        );
    }
    if let Some(path) = &args.attributes {
        let table = load_attributes(open(path)?)?;
        let attached = g.attach_attributes(&table);
        if !table.is_empty() && attached == 0 {
            eprintln!("warning: no attribute node id matched the graph");
        }
    }
    if args.lcc {
        let before = g.node_count();
        g = g.largest_connected_component();
        if g.node_count() < before {
            eprintln!(
                "note: restricted to the largest connected component: {} of {} nodes",
                g.node_count(),
                before
            );
        }
    }
    Ok(g)
}

fn out_dir(args: &OutArgs) -> Result<PathBuf, CliError> {
    let dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os("CONCORD_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `run.json`: the resolved configuration plus the artifact list.
fn write_sidecar(dir: &Path, mut config: Value, outputs: &[&str]) -> Result<(), CliError> {
    let map = config.as_object_mut().expect("sidecar config is an object");
    map.insert("outputs".into(), json!(outputs));
    write_json(&dir.join("run.json"), &config)
}

fn install_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .map_err(|e| CliError::Usage(format!("could not size the thread pool: {e}")))
}

fn resolve_mode(arg: ModeArg, g: &WeightedGraph) -> ConsensusMode {
    match arg {
        ModeArg::Full => ConsensusMode::Full,
        ModeArg::EdgeRestricted => ConsensusMode::EdgeRestricted,
        ModeArg::Auto => {
            if g.edge_count() > AUTO_MODE_EDGE_LIMIT {
                ConsensusMode::EdgeRestricted
            } else {
                ConsensusMode::Full
            }
        }
    }
}

/// Parse a `lo:hi:step` threshold grid into explicit values.
fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("--tau-grid {spec:?}: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected lo:hi:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(&e.to_string()))?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || lo > hi {
        return Err(bad("need finite lo <= hi and step > 0"));
    }
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(bad("thresholds must lie in [0, 1]"));
    }
    let mut taus = Vec::new();
    let mut k = 0u32;
    loop {
        let t = lo + f64::from(k) * step;
        if t > hi + step * 1e-9 {
            break;
        }
        // Round away float-accumulation dust so grid values print cleanly.
        taus.push(((t.min(hi)) * 1e12).round() / 1e12);
        k += 1;
    }
    Ok(taus)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// ---- consensus stage shared by `consensus` and inline `consistency` --------

struct ConsensusStage {
    partition: Partition,
    matrix: ConsensusMatrix,
    ensemble: EnsembleResult,
    iterations: u32,
    tau: f64,
    /// One row per grid value when a sweep ran: (tau, Q, iterations,
    /// communities, winner).
    sweep: Option<Vec<(f64, f64, u32, usize, bool)>>,
}

/// Run the ensemble/consensus loop with either a fixed threshold or a sweep.
///
/// On non-convergence the partial result (the most frequent partition of the
/// last ensemble) is written to `dir` together with a diagnostics stub, and
/// the error propagates so the caller exits 3.
fn consensus_stage(
    g: &WeightedGraph,
    detection: DetectionConfig,
    ens: &EnsembleArgs,
    dir: &Path,
) -> Result<ConsensusStage, CliError> {
    let mode = resolve_mode(ens.mode, g);
    let base = ConsensusConfig {
        detection,
        n_runs: ens.runs,
        tau: ens.tau.unwrap_or(0.5),
        mode,
        max_iterations: ens.max_iterations,
        reattach_isolated: !ens.no_reattach,
    };

    let dump_partial = |iterations: u32, last: &Partition| -> Result<(), CliError> {
        last.write_csv(g, create(&dir.join("consensus_partition.csv"))?)?;
        let q = modularity(g, last, detection.gamma)?;
        write_json(
            &dir.join("diagnostics.json"),
            &json!({
                "converged": false,
                "iterations": iterations,
                "tau": ens.tau,
                "mode": mode,
                "n_runs": ens.runs,
                "consensus_modularity": q,
                "unique_partitions": Value::Null,
                "mean_modularity": Value::Null,
                "mean_nmi": Value::Null,
                "mean_consensus_nmi": Value::Null,
            }),
        )
    };

    match ens.tau {
        Some(tau) => match consensus_cluster(g, &base, ens.seed) {
            Ok(out) => Ok(ConsensusStage {
                partition: out.partition,
                matrix: out.first_matrix,
                ensemble: out.first_ensemble,
                iterations: out.iterations,
                tau,
                sweep: None,
            }),
            Err(EnsembleError::NoConvergence { iterations, last }) => {
                dump_partial(iterations, &last)?;
                Err(EnsembleError::NoConvergence { iterations, last }.into())
            }
            Err(e) => Err(e.into()),
        },
        None => {
            let grid = parse_grid(&ens.tau_grid)?;
            match tau_sweep(g, &base, &grid, ens.seed) {
                Ok(sweep) => {
                    let best = sweep.best;
                    let rows: Vec<(f64, f64, u32, usize, bool)> = sweep
                        .entries
                        .iter()
                        .enumerate()
                        .map(|(i, e)| {
                            (e.tau, e.modularity, e.iterations, e.partition.num_communities(), i == best)
                        })
                        .collect();
                    let winner = sweep.entries.into_iter().nth(best).expect("best is in range");
                    Ok(ConsensusStage {
                        partition: winner.partition,
                        matrix: sweep.first_matrix,
                        ensemble: sweep.first_ensemble,
                        iterations: winner.iterations,
                        tau: winner.tau,
                        sweep: Some(rows),
                    })
                }
                Err(EnsembleError::NoConvergence { iterations, last }) => {
                    dump_partial(iterations, &last)?;
                    Err(EnsembleError::NoConvergence { iterations, last }.into())
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Everything the consensus stage produces, written to disk. Returns the
/// artifact names for the sidecar.
fn write_consensus_artifacts(
    g: &WeightedGraph,
    stage: &ConsensusStage,
    gamma: f64,
    master_seed: u64,
    dir: &Path,
) -> Result<Vec<&'static str>, CliError> {
    let mut outputs = vec!["consensus_partition.csv", "consensus_matrix.tsv", "modularities.csv"];
    stage.partition.write_csv(g, create(&dir.join("consensus_partition.csv"))?)?;
    stage.matrix.write_tsv(g, create(&dir.join("consensus_matrix.tsv"))?)?;

    // Per-run scores sorted ascending, consensus last with rank 0 — ready
    // for a sorted-line plot.
    let consensus_q = modularity(g, &stage.partition, gamma)?;
    let mut sorted: Vec<f64> = stage.ensemble.modularities().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("modularities are finite"));
    let mut w = csv::Writer::from_writer(create(&dir.join("modularities.csv"))?);
    w.write_record(["kind", "rank", "modularity"]).map_err(csv_err)?;
    for (i, q) in sorted.iter().enumerate() {
        w.write_record(["run", &(i + 1).to_string(), &q.to_string()]).map_err(csv_err)?;
    }
    w.write_record(["consensus", "0", &consensus_q.to_string()]).map_err(csv_err)?;
    w.flush()?;
    drop(w);

    if let Some(rows) = &stage.sweep {
        outputs.push("tau_sweep.csv");
        let mut w = csv::Writer::from_writer(create(&dir.join("tau_sweep.csv"))?);
        w.write_record(["tau", "modularity", "iterations", "communities", "best"])
            .map_err(csv_err)?;
        for (tau, q, iters, k, best) in rows {
            w.write_record([
                tau.to_string(),
                q.to_string(),
                iters.to_string(),
                k.to_string(),
                u8::from(*best).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }

    let (mean_nmi, unique) = ensemble_nmi(&stage.ensemble);
    let mean_consensus_nmi = consensus_nmi(&stage.partition, &stage.ensemble)
        .expect("consensus and ensemble share one graph");
    outputs.push("ensemble.json");
    write_json(
        &dir.join("ensemble.json"),
        &json!({
            "master_seed": master_seed,
            "n_runs": stage.ensemble.n(),
            "mode": stage.matrix.mode(),
            "tau": stage.tau,
            "seeds": stage.ensemble.seeds(),
            "modularities": stage.ensemble.modularities(),
            "unique_partitions": unique,
        }),
    )?;
    outputs.push("diagnostics.json");
    write_json(
        &dir.join("diagnostics.json"),
        &json!({
            "converged": true,
            "iterations": stage.iterations,
            "tau": stage.tau,
            "mode": stage.matrix.mode(),
            "n_runs": stage.ensemble.n(),
            "unique_partitions": unique,
            "mean_modularity": mean(stage.ensemble.modularities()),
            "consensus_modularity": consensus_q,
            "mean_nmi": mean_nmi,
            "mean_consensus_nmi": mean_consensus_nmi,
        }),
    )?;
    Ok(outputs)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(e.to_string())
}

// ---- commands ---------------------------------------------------------------

pub fn detect(args: DetectArgs) -> Result<(), CliError> {
    let g = load_graph(&args.input)?;
    let cfg = DetectionConfig {
        gamma: args.detection.gamma,
        seed: args.seed,
        algorithm: args.detection.algorithm,
        ..Default::default()
    };
    let partition = run_detection(&g, &cfg)?;
    let q = modularity(&g, &partition, cfg.gamma)?;

    let dir = out_dir(&args.out)?;
    partition.write_csv(&g, create(&dir.join("partition.csv"))?)?;
    write_json(
        &dir.join("stats.json"),
        &json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "total_weight": g.total_weight(),
            "modularity": q,
            "communities": partition.num_communities(),
            "gamma": cfg.gamma,
            "seed": cfg.seed,
            "algorithm": cfg.algorithm,
        }),
    )?;
    write_sidecar(
        &dir,
        json!({
            "command": "detect",
            "input": args.input.input.display().to_string(),
            "attributes": args.input.attributes.as_ref().map(|p| p.display().to_string()),
            "lcc": args.input.lcc,
            "gamma": cfg.gamma,
            "seed": cfg.seed,
            "algorithm": cfg.algorithm,
        }),
        &["partition.csv", "stats.json"],
    )?;
    println!(
        "{} communities, Q = {q:.6}; wrote partition.csv, stats.json to {}",
        partition.num_communities(),
        dir.display()
    );
    Ok(())
}

pub fn consensus(args: ConsensusArgs) -> Result<(), CliError> {
    install_threads(args.ensemble.threads)?;
    let g = load_graph(&args.input)?;
    let dir = out_dir(&args.out)?;
    let detection = DetectionConfig {
        gamma: args.detection.gamma,
        algorithm: args.detection.algorithm,
        ..Default::default()
    };
    let stage = consensus_stage(&g, detection, &args.ensemble, &dir)?;
    let outputs = write_consensus_artifacts(&g, &stage, detection.gamma, args.ensemble.seed, &dir)?;

    write_sidecar(
        &dir,
        json!({
            "command": "consensus",
            "input": args.input.input.display().to_string(),
            "attributes": args.input.attributes.as_ref().map(|p| p.display().to_string()),
            "lcc": args.input.lcc,
            "gamma": detection.gamma,
            "algorithm": detection.algorithm,
            "runs": args.ensemble.runs,
            "seed": args.ensemble.seed,
            "tau": args.ensemble.tau,
            "tau_grid": if args.ensemble.tau.is_some() { Value::Null } else { json!(args.ensemble.tau_grid) },
            "mode": stage.matrix.mode(),
            "max_iterations": args.ensemble.max_iterations,
            "reattach": !args.ensemble.no_reattach,
        }),
        &outputs,
    )?;
    let q = modularity(&g, &stage.partition, detection.gamma)?;
    println!(
        "tau = {}, {} communities, consensus Q = {q:.6}, {} iteration(s); artifacts in {}",
        stage.tau,
        stage.partition.num_communities(),
        stage.iterations,
        dir.display()
    );
    Ok(())
}

pub fn consistency(args: ConsistencyArgs) -> Result<(), CliError> {
    install_threads(args.ensemble.threads)?;
    let g = load_graph(&args.input)?;
    let dir = out_dir(&args.out)?;
    let params = ConsistencyParams { theta: args.theta, kappa: args.kappa, phi: args.phi };

    let mut outputs: Vec<&'static str> = Vec::new();
    let (partition, matrix, source) = match (&args.partition, &args.matrix) {
        (Some(p), Some(m)) => {
            let partition = Partition::read_csv(&g, open(p)?)?;
            let matrix = ConsensusMatrix::read_tsv(&g, open(m)?)?;
            let source = json!({
                "partition": p.display().to_string(),
                "matrix": m.display().to_string(),
            });
            (partition, matrix, source)
        }
        _ => {
            // No artifacts given: run consensus inline and keep its outputs
            // next to the report.
            let detection = DetectionConfig {
                gamma: args.detection.gamma,
                algorithm: args.detection.algorithm,
                ..Default::default()
            };
            let stage = consensus_stage(&g, detection, &args.ensemble, &dir)?;
            outputs.extend(write_consensus_artifacts(
                &g,
                &stage,
                detection.gamma,
                args.ensemble.seed,
                &dir,
            )?);
            let source = json!({
                "inline": {
                    "gamma": detection.gamma,
                    "algorithm": detection.algorithm,
                    "runs": args.ensemble.runs,
                    "seed": args.ensemble.seed,
                    "tau": stage.tau,
                    "mode": stage.matrix.mode(),
                }
            });
            (stage.partition, stage.matrix, source)
        }
    };

    let report = analyze(&g, &matrix, &partition, &params, args.top_k)?;
    let consistencies: Vec<f64> = report.nodes.iter().map(|r| r.consistency).collect();
    let correlation =
        consistency_degree_correlation(&g, &consistencies, args.degree_bins, args.consistency_bins)?;
    let mean_edge = mean_edge_consistency(&g, &matrix)?;
    let quantiles = edge_consistency_quantiles(&g, &matrix, &QUANTILE_PROBS)?;

    write_node_report_csv(&g, &report, create(&dir.join("node_consistency.csv"))?)?;
    write_community_summary_csv(&report, create(&dir.join("community_summary.csv"))?)?;
    write_histogram_csv(&correlation, create(&dir.join("consistency_histogram.csv"))?)?;
    write_json(
        &dir.join("correlation.json"),
        &json!({
            "rho": correlation.rho,
            "p_value": correlation.p_value,
            "nodes": correlation.nodes,
            "mean_edge_consistency": mean_edge,
            "edge_consistency_quantiles": quantiles
                .iter()
                .map(|(p, v)| json!({"p": p, "value": v}))
                .collect::<Vec<_>>(),
        }),
    )?;
    outputs.extend([
        "node_consistency.csv",
        "community_summary.csv",
        "consistency_histogram.csv",
        "correlation.json",
    ]);

    write_sidecar(
        &dir,
        json!({
            "command": "consistency",
            "input": args.input.input.display().to_string(),
            "attributes": args.input.attributes.as_ref().map(|p| p.display().to_string()),
            "lcc": args.input.lcc,
            "theta": params.theta,
            "kappa": params.kappa,
            "phi": params.phi,
            "top_k": args.top_k,
            "degree_bins": args.degree_bins,
            "consistency_bins": args.consistency_bins,
            "source": source,
        }),
        &outputs,
    )?;

    let count = |class: NodeClass| report.nodes.iter().filter(|r| r.class == class).count();
    println!(
        "{} nodes: {} hard-core, {} core, {} fringe, {} other; mean edge consistency {:.4}; artifacts in {}",
        report.nodes.len(),
        count(NodeClass::HardCore),
        count(NodeClass::Core),
        count(NodeClass::Fringe),
        count(NodeClass::Other),
        mean_edge,
        dir.display()
    );
    Ok(())
}

pub fn aggregate(args: AggregateArgs) -> Result<(), CliError> {
    let input = InputArgs {
        input: args.input.clone(),
        attributes: Some(args.attributes.clone()),
        lcc: args.lcc,
    };
    let g = load_graph(&input)?;
    let (agg, dropped) = g.aggregate_by_attribute(&args.key)?;
    if dropped > 0.0 {
        eprintln!("warning: edge weight {dropped} fell inside groups and was dropped as self-loops");
    }
    if agg.edge_count() == 0 {
        eprintln!("warning: every edge fell inside one group; the aggregated edge list is empty");
    }

    let dir = out_dir(&args.out)?;
    agg.write_edge_list(create(&dir.join("aggregated.tsv"))?)?;
    write_sidecar(
        &dir,
        json!({
            "command": "aggregate",
            "input": args.input.display().to_string(),
            "attributes": args.attributes.display().to_string(),
            "key": args.key,
            "lcc": args.lcc,
        }),
        &["aggregated.tsv"],
    )?;
    println!(
        "{} groups, {} edges, total weight {}; wrote aggregated.tsv to {}",
        agg.node_count(),
        agg.edge_count(),
        agg.total_weight(),
        dir.display()
    );
    Ok(())
}

pub fn stats(args: StatsArgs) -> Result<(), CliError> {
    let g = load_graph(&args.input)?;
    let s = g.stats();
    let lcc_nodes = if args.input.lcc {
        g.node_count()
    } else {
        g.largest_connected_component().node_count()
    };
    let doc = json!({
        "nodes": s.nodes,
        "edges": s.edges,
        "total_weight": g.total_weight(),
        "mean_degree": s.mean_degree,
        "mean_weighted_degree": s.mean_weighted_degree,
        "lcc_nodes": lcc_nodes,
        "restricted_to_lcc": args.input.lcc,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

pub fn nmi(args: NmiArgs) -> Result<(), CliError> {
    let a = read_partition_file(&args.first)?;
    let b = read_partition_file(&args.second)?;
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a = a.keys().find(|k| !b.contains_key(*k));
        let only_b = b.keys().find(|k| !a.contains_key(*k));
        let mut msg = format!(
            "partition files cover different node sets ({} vs {} nodes)",
            a.len(),
            b.len()
        );
        if let Some(k) = only_a {
            msg.push_str(&format!("; {k:?} only in {}", args.first.display()));
        }
        if let Some(k) = only_b {
            msg.push_str(&format!("; {k:?} only in {}", args.second.display()));
        }
        return Err(CliError::Data(msg));
    }
    let la: Vec<u32> = a.values().copied().collect();
    let lb: Vec<u32> = b.values().copied().collect();
    let norm = match args.norm {
        NormArg::Arithmetic => NmiNormalization::Arithmetic,
        NormArg::Max => NmiNormalization::Max,
        NormArg::Joint => NmiNormalization::Joint,
    };
    let value = nmi_of_labelings(&la, &lb, norm)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let doc = json!({
        "nmi": value,
        "normalization": norm,
        "nodes": la.len(),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

/// Read a `node_id,community` CSV as an ordered map. No graph required:
/// `nmi` compares files on their shared id set.
fn read_partition_file(path: &Path) -> Result<BTreeMap<String, u32>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    {
        let headers = rdr.headers().map_err(csv_err)?;
        if headers.len() != 2 || &headers[0] != "node_id" || &headers[1] != "community" {
            return Err(CliError::Data(format!(
                "{}: expected header node_id,community, found {headers:?}",
                path.display()
            )));
        }
    }
    let mut map = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(0).unwrap_or_default();
        let label: u32 = record
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|e| CliError::Data(format!("{}:{line}: bad community: {e}", path.display())))?;
        if map.insert(id.to_string(), label).is_some() {
            return Err(CliError::Data(format!(
                "{}:{line}: duplicate node id {id:?}",
                path.display()
            )));
        }
    }
    if map.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(map)
}

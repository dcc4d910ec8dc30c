//! `concord` — ensemble community detection from the command line.
//!
//! Subcommands mirror the pipeline stages: `detect` for one seeded run,
//! `consensus` for the full ensemble/consensus loop, `consistency` for the
//! node-level membership report, plus `aggregate`, `stats` and `nmi`
//! utilities. Every run with the same inputs, flags and master seed writes
//! byte-identical artifacts.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 unreadable or
//! malformed data, 3 numeric failure (non-convergence).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concord::detect::Algorithm;

mod ops;

#[derive(Parser)]
#[command(
    name = "concord",
    version,
    about = "Consensus community detection for weighted graphs",
    long_about = "Runs randomized modularity-based community detection as an ensemble, \
                  builds consensus clusterings, and scores per-node membership \
                  consistency so that community assignments can be trusted."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// One seeded detection run: partition CSV plus a stats JSON.
    Detect(DetectArgs),
    /// Ensemble plus consensus clustering, with an optional threshold sweep.
    Consensus(ConsensusArgs),
    /// Node-level membership-consistency report from consensus artifacts.
    Consistency(ConsistencyArgs),
    /// Collapse nodes sharing an attribute value into one node each.
    Aggregate(AggregateArgs),
    /// Graph summary as JSON on stdout.
    Stats(StatsArgs),
    /// Compare two partition CSVs; NMI as JSON on stdout.
    Nmi(NmiArgs),
}

/// Flags shared by every command that reads a graph.
#[derive(Args)]
pub struct InputArgs {
    /// Edge list: `src<TAB>dst[<TAB>weight]`, `#` comments, weight defaults to 1.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Node attribute CSV (`node_id,attr_key,attr_value`) to attach.
    #[arg(long, value_name = "FILE")]
    pub attributes: Option<PathBuf>,

    /// Restrict the analysis to the largest connected component.
    #[arg(long)]
    pub lcc: bool,
}

#[derive(Args)]
pub struct OutArgs {
    /// Output directory; defaults to $CONCORD_OUT_DIR, then the current directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Detection knobs shared by every command that clusters.
#[derive(Args)]
pub struct DetectionArgs {
    /// Resolution: multiplier on the null-model term. Larger finds smaller communities.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Local-move variant.
    #[arg(long, default_value = "leiden-refined")]
    pub algorithm: Algorithm,
}

/// Ensemble/consensus knobs shared by `consensus` and inline `consistency`.
#[derive(Args)]
pub struct EnsembleArgs {
    /// Ensemble size: detection runs per consensus iteration.
    #[arg(long = "runs", visible_alias = "n", default_value_t = 100)]
    pub runs: usize,

    /// Master seed; per-run seeds derive from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fixed agreement threshold in [0,1]; skips the sweep.
    #[arg(long, conflicts_with = "tau_grid")]
    pub tau: Option<f64>,

    /// Threshold grid `lo:hi:step`; the tau whose consensus scores highest wins.
    #[arg(long, value_name = "LO:HI:STEP", default_value = "0.1:0.9:0.1")]
    pub tau_grid: String,

    /// Consensus matrix storage. `auto` stays full up to 100k edges.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,

    /// Consensus iteration cap before giving up.
    #[arg(long, default_value_t = 10)]
    pub max_iterations: u32,

    /// Leave nodes isolated by thresholding alone instead of reattaching them.
    #[arg(long)]
    pub no_reattach: bool,

    /// Worker thread cap. Results never depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Full,
    EdgeRestricted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Arithmetic,
    Max,
    Joint,
}

#[derive(Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub detection: DetectionArgs,

    /// RNG seed for the single run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct ConsensusArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub detection: DetectionArgs,

    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct ConsistencyArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Consensus partition CSV from an earlier `consensus` run.
    #[arg(long, value_name = "FILE", requires = "matrix")]
    pub partition: Option<PathBuf>,

    /// Consensus matrix TSV from an earlier `consensus` run.
    #[arg(long, value_name = "FILE", requires = "partition")]
    pub matrix: Option<PathBuf>,

    #[command(flatten)]
    pub detection: DetectionArgs,

    /// Used only when no artifacts are given and consensus runs inline.
    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    /// Pair-consistency cutoff for counting an edge as stable.
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,

    /// Membership consistency at or above this is a community core.
    #[arg(long, default_value_t = 0.9)]
    pub kappa: f64,

    /// Membership consistency below this is fringe.
    #[arg(long, default_value_t = 0.5)]
    pub phi: f64,

    /// Heaviest members listed per community.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,

    /// Log-spaced weighted-degree bins in the 2D histogram.
    #[arg(long, default_value_t = 20)]
    pub degree_bins: usize,

    /// Linear consistency bins in the 2D histogram.
    #[arg(long, default_value_t = 20)]
    pub consistency_bins: usize,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct AggregateArgs {
    /// Edge list: `src<TAB>dst[<TAB>weight]`, `#` comments, weight defaults to 1.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Node attribute CSV (`node_id,attr_key,attr_value`); must cover every node.
    #[arg(long, value_name = "FILE")]
    pub attributes: PathBuf,

    /// Attribute key to group nodes by.
    #[arg(long, value_name = "NAME")]
    pub key: String,

    /// Restrict to the largest connected component before aggregating.
    #[arg(long)]
    pub lcc: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Args)]
pub struct NmiArgs {
    /// First partition CSV (`node_id,community`).
    pub first: PathBuf,

    /// Second partition CSV over the same node ids.
    pub second: PathBuf,

    /// Normalization of the mutual information.
    #[arg(long, value_enum, default_value_t = NormArg::Arithmetic)]
    pub norm: NormArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Detect(args) => ops::detect(args),
        Command::Consensus(args) => ops::consensus(args),
        Command::Consistency(args) => ops::consistency(args),
        Command::Aggregate(args) => ops::aggregate(args),
        Command::Stats(args) => ops::stats(args),
        Command::Nmi(args) => ops::nmi(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use agent_graph::engine::sync::DEFAULT_LOCK_TABLE_SIZE;
use agent_graph::engine::wire::DEFAULT_BUFFER_CAPACITY;
use agent_graph::partition::{PartitionMode, DEFAULT_EPSILON, DEFAULT_SYNC_INTERVAL};
use agent_graph::programs::{DEFAULT_BASE, DEFAULT_DAMPING, DEFAULT_ITERATIONS};

/// Loader count used by the `gre-p` preset when `--loaders` is not given.
pub const PARALLEL_PRESET_LOADERS: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "agent-graph", version, about = "Generate, partition and process graphs on agent-graph partitions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an R-MAT edge list.
    Gen(GenArgs),
    /// Place edges on k partitions and write partition files plus a metrics report.
    Partition(PartitionArgs),
    /// Run a vertex program over saved partitions.
    Run(RunArgs),
    /// Compare metrics reports and result files.
    Analyze(AnalyzeArgs),
    /// Run a serial reference algorithm on an edge list.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum App {
    Pagerank,
    Sssp,
    Cc,
}

/// Placement modes plus the two presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hash,
    GreedyOblivious,
    GreedyCoordinated,
    /// Coordinated greedy with a single loader.
    GreS,
    /// Oblivious greedy with several loaders.
    GreP,
}

impl ModeArg {
    pub fn mode(self) -> PartitionMode {
        match self {
            ModeArg::Hash => PartitionMode::Hash,
            ModeArg::GreedyOblivious | ModeArg::GreP => PartitionMode::GreedyOblivious,
            ModeArg::GreedyCoordinated | ModeArg::GreS => PartitionMode::GreedyCoordinated,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// log2 of the vertex count.
    #[arg(long)]
    pub scale: u32,
    #[arg(long, default_value_t = 16)]
    pub edge_factor: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Uniform integer weights in LOW:HIGH.
    #[arg(long, value_parser = parse_range)]
    pub weights: Option<(u32, u32)>,
    /// Randomly relabel vertices.
    #[arg(long)]
    pub permute: bool,
    /// Output path; a `.bin` extension selects the binary format.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Edge list (`.bin` for binary).
    #[arg(short, long)]
    pub input: PathBuf,
    /// The input carries edge weights.
    #[arg(long)]
    pub weighted: bool,
    /// Add every reverse edge before partitioning.
    #[arg(long)]
    pub symmetrize: bool,
    #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub k: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::GreedyCoordinated)]
    pub mode: ModeArg,
    /// Parallel loaders; 1 by default, 8 for `gre-p`. `gre-s` requires 1.
    #[arg(long)]
    pub loaders: Option<usize>,
    /// Edges each loader places between merges in coordinated mode.
    #[arg(long, default_value_t = DEFAULT_SYNC_INTERVAL)]
    pub sync_interval: usize,
    /// Edge-balance slack reported against.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub report_format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Execution lanes per partition worker.
    #[arg(long, env = "AGENT_GRAPH_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Message buffer size in bytes.
    #[arg(long, env = "AGENT_GRAPH_BUFFER_CAPACITY", default_value_t = DEFAULT_BUFFER_CAPACITY)]
    pub buffer_capacity: usize,
    #[arg(long, default_value_t = DEFAULT_LOCK_TABLE_SIZE)]
    pub lock_table_size: usize,
    /// Permute vertex and message processing order with this seed.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory written by `partition`.
    #[arg(short, long)]
    pub partitions: PathBuf,
    #[arg(long, value_enum)]
    pub app: App,
    /// Superstep cap; PageRank runs exactly this many.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: u64,
    /// SSSP source vertex.
    #[arg(long)]
    pub source: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, default_value_t = DEFAULT_BASE)]
    pub base: f64,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Snapshot every N supersteps into `--checkpoint`.
    #[arg(long, requires = "checkpoint")]
    pub checkpoint_interval: Option<u64>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Continue from a snapshot taken on the same partitions.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Result CSV (`global_id,value`).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-superstep report, one JSON object per line.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Metrics reports written by `partition`.
    #[arg(long, num_args = 1..)]
    pub metrics: Vec<PathBuf>,
    /// Two result CSVs to compare.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"])]
    pub diff: Vec<PathBuf>,
    /// Largest absolute difference counted as equal.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub weighted: bool,
    #[arg(long, value_enum)]
    pub app: App,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: u64,
    #[arg(long)]
    pub source: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, default_value_t = DEFAULT_BASE)]
    pub base: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LOW:HIGH")?;
    let lo: u32 = lo.trim().parse().map_err(|e| format!("LOW: {e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("HIGH: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

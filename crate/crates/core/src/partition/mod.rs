//! Streaming k-way edge placement and agent-graph construction.
//!
//! Edges are placed one at a time by the greedy heuristic (or by hashing the
//! source for the baseline). No original edge is ever cut: an edge placed away
//! from its source's owner runs from a *scatter* agent of the source, and an
//! edge placed away from its target's owner runs into a *combiner* agent of
//! the target. The master↔agent links are the only communication edges.

mod agent;
mod heuristic;
pub mod io;
mod membership;
mod metrics;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use agent::{build_agent_graph, graph_from_partitions, validate_partitions, AgentGraphPartition, Ragged, VertexClass};
pub use heuristic::{greedy_place, HeuristicState, DEFAULT_EPSILON, DELTA};
pub use membership::MembershipKind;
pub use metrics::{compute_metrics, PartitionMetrics};

use crate::graph::{EdgeStream, GlobalVertexId, GraphError};
use heuristic::greedy_place_layered;

pub const DEFAULT_SYNC_INTERVAL: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum PartitionError {
    #[error("partition count must be >= 1")]
    ZeroPartitions,
    #[error("loader count must be >= 1")]
    ZeroLoaders,
    #[error("placement has {placement} entries for {edges} edges")]
    PlacementLength { placement: usize, edges: usize },
    #[error("edge {edge} assigned to partition {part} but k = {k}")]
    PlacementOutOfRange { edge: usize, part: u32, k: u32 },
    #[error("edge endpoint {0} is not in the vertex set")]
    UnknownVertex(GlobalVertexId),
    #[error("metrics undefined for an empty vertex set")]
    UndefinedMetrics,
    #[error("partition {part}: {message}")]
    Invariant { part: u32, message: String },
    #[error("partition file: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// SplitMix64 finalizer. Used for hash placement and hash ownership.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Baseline placement: the partition owning the source, `mix64(u) mod k`.
#[inline]
pub fn hash_place(u: GlobalVertexId, k: usize) -> usize {
    (mix64(u.0) % k as u64) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    /// Each loader keeps a private heuristic state.
    GreedyOblivious,
    /// Loaders merge heuristic state every `sync_interval` edges.
    GreedyCoordinated,
    Hash,
}

impl PartitionMode {
    pub fn is_greedy(self) -> bool {
        !matches!(self, PartitionMode::Hash)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionMode::GreedyOblivious => "greedy-oblivious",
            PartitionMode::GreedyCoordinated => "greedy-coordinated",
            PartitionMode::Hash => "hash",
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy-oblivious" => Ok(PartitionMode::GreedyOblivious),
            "greedy-coordinated" => Ok(PartitionMode::GreedyCoordinated),
            "hash" => Ok(PartitionMode::Hash),
            other => Err(format!("unknown partition mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionConfig {
    pub k: usize,
    pub mode: PartitionMode,
    pub loaders: usize,
    pub sync_interval: usize,
    pub epsilon: f64,
    pub membership: MembershipKind,
}

impl PartitionConfig {
    pub fn new(k: usize, mode: PartitionMode) -> Self {
        PartitionConfig {
            k,
            mode,
            loaders: 1,
            sync_interval: DEFAULT_SYNC_INTERVAL,
            epsilon: DEFAULT_EPSILON,
            membership: MembershipKind::Exact,
        }
    }

    pub fn loaders(mut self, loaders: usize) -> Self {
        self.loaders = loaders;
        self
    }

    pub fn sync_interval(mut self, interval: usize) -> Self {
        self.sync_interval = interval;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn membership(mut self, kind: MembershipKind) -> Self {
        self.membership = kind;
        self
    }
}

/// Partition index of every input edge, aligned with the stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacementResult {
    pub k: u32,
    pub mode: PartitionMode,
    pub assignment: Vec<u32>,
}

impl PlacementResult {
    /// Edge count per partition.
    pub fn loads(&self) -> Vec<u64> {
        let mut ne = vec![0u64; self.k as usize];
        for &p in &self.assignment {
            ne[p as usize] += 1;
        }
        ne
    }
}

fn chunk_bounds(len: usize, loaders: usize) -> Vec<std::ops::Range<usize>> {
    let size = len.div_ceil(loaders).max(1);
    (0..loaders)
        .map(|i| (i * size).min(len)..((i + 1) * size).min(len))
        .collect()
}

/// Places every edge of `edges` on one of `cfg.k` partitions.
///
/// The stream is split into `cfg.loaders` contiguous chunks. In oblivious
/// mode each chunk is placed against a private state. In coordinated mode the
/// loaders advance in rounds of `sync_interval` edges, each scoring against
/// the shared state plus its own unmerged delta; deltas are merged in loader
/// order at the end of each round. Output is deterministic in both modes.
pub fn partition_stream(
    edges: &EdgeStream,
    cfg: &PartitionConfig,
) -> Result<PlacementResult, PartitionError> {
    if cfg.k == 0 {
        return Err(PartitionError::ZeroPartitions);
    }
    if cfg.loaders == 0 {
        return Err(PartitionError::ZeroLoaders);
    }
    let list = edges.edges();
    let k = cfg.k;
    let assignment: Vec<u32> = match cfg.mode {
        PartitionMode::Hash => list
            .par_iter()
            .map(|e| hash_place(e.source, k) as u32)
            .collect(),
        PartitionMode::GreedyOblivious => {
            let chunks = chunk_bounds(list.len(), cfg.loaders);
            let parts: Vec<Vec<u32>> = chunks
                .into_par_iter()
                .map(|range| {
                    let mut state = HeuristicState::with_membership(k, cfg.membership);
                    list[range]
                        .iter()
                        .map(|e| greedy_place(e.source, e.target, &mut state) as u32)
                        .collect()
                })
                .collect();
            parts.concat()
        }
        PartitionMode::GreedyCoordinated => coordinated(list, cfg),
    };
    Ok(PlacementResult {
        k: k as u32,
        mode: cfg.mode,
        assignment,
    })
}

fn coordinated(list: &[crate::graph::Edge], cfg: &PartitionConfig) -> Vec<u32> {
    let k = cfg.k;
    let interval = cfg.sync_interval.max(1);
    let chunks = chunk_bounds(list.len(), cfg.loaders);
    let mut shared = HeuristicState::with_membership(k, cfg.membership);
    let mut loaders: Vec<(std::ops::Range<usize>, HeuristicState)> = chunks
        .into_iter()
        .map(|r| (r, HeuristicState::with_membership(k, cfg.membership)))
        .collect();
    let mut assignment = vec![0u32; list.len()];
    loop {
        if loaders.iter().all(|(r, _)| r.is_empty()) {
            break;
        }
        let snapshot = &shared;
        let placed: Vec<(usize, Vec<u32>)> = loaders
            .par_iter_mut()
            .map(|(range, local)| {
                let start = range.start;
                let end = (start + interval).min(range.end);
                let out = list[start..end]
                    .iter()
                    .map(|e| greedy_place_layered(e.source, e.target, snapshot, local) as u32)
                    .collect();
                range.start = end;
                (start, out)
            })
            .collect();
        for (start, out) in placed {
            assignment[start..start + out.len()].copy_from_slice(&out);
        }
        // merge point
        for (_, local) in loaders.iter_mut() {
            shared.merge_from(local);
            local.clear();
        }
    }
    assignment
}

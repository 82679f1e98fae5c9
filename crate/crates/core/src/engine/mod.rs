//! Bulk-synchronous Scatter-Combine execution over agent-graph partitions.
//!
//! Each superstep has two phases. In phase 1 every scatter-active master runs
//! `scatter` along its local out-edges and ships its scatter payload once to
//! every partition holding a scatter agent of it; agents relay the payload
//! along their own out-edges. Messages reaching a combiner are folded there
//! and forwarded to the remote master once, at the end of the phase. In
//! phase 2 masters marked for apply run `apply`.
//!
//! One worker thread owns each partition. Workers exchange only
//! [`wire`]-format byte buffers over channels; the phase-1 waves (scatter,
//! relay, combiner flush, master fold) are separated by barriers.

mod checkpoint;
pub mod sync;
pub mod wire;
mod worker;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{GlobalVertexId, LocalVertexId, PropertyColumn};
use crate::partition::AgentGraphPartition;
use sync::{Bitmap, LockTable, LockedColumn, DEFAULT_LOCK_TABLE_SIZE};
use wire::{WireValue, DEFAULT_BUFFER_CAPACITY};

pub use checkpoint::CHECKPOINT_MAGIC;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("no initial value for master {0}")]
    MissingInit(GlobalVertexId),
    #[error("partition {part}: message for unknown vertex {vertex} (op {op})")]
    Routing { part: u32, vertex: GlobalVertexId, op: u8 },
    #[error("wire format: {0}")]
    Wire(String),
    #[error("superstep {superstep}: {sent} messages sent but {received} received")]
    Conservation { superstep: u64, sent: u64, received: u64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint does not match partitions: {0}")]
    Compatibility(String),
    #[error("worker panicked: {0}")]
    Worker(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What `scatter` sees about the edge being traversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeContext {
    pub source: GlobalVertexId,
    /// Whole-graph out-degree of the source.
    pub source_out_degree: u64,
    pub weight: Option<u32>,
}

/// A Scatter-Combine vertex program.
///
/// `Vertex` is the master-only result state, `Scatter` the state read by
/// `scatter` (and shipped to scatter agents), `Message` both the message
/// payload and the combine accumulator. `combine` must be commutative and
/// associative with `combine_identity` as two-sided identity.
pub trait VertexProgram: Sync {
    type Vertex: WireValue + Send + Sync;
    type Scatter: WireValue + Send + Sync;
    type Message: WireValue + PartialEq + Send + Sync + std::fmt::Debug;
    type Output;

    /// Wire format of combine messages.
    const MESSAGE_FORMAT: u16;
    /// Wire format of master-to-scatter-agent payloads.
    const SCATTER_FORMAT: u16;

    fn name(&self) -> &'static str;

    fn combine_identity(&self) -> Self::Message;

    fn scatter(&self, data: &Self::Scatter, edge: EdgeContext) -> Self::Message;

    fn combine(&self, acc: Self::Message, msg: Self::Message) -> Self::Message;

    /// Folds the accumulated `sum` into the master. Returns whether the master
    /// becomes scatter-active.
    fn apply(&self, vertex: &mut Self::Vertex, scatter: &mut Self::Scatter, sum: Self::Message) -> bool;

    /// Runs after a master finished its phase-1 work; returns whether it
    /// stays scatter-active.
    fn assert_to_halt(&self) -> bool;

    /// If true, only masters that received a message apply; otherwise every
    /// master applies every superstep.
    fn combine_activates_apply(&self) -> bool;

    fn output(&self, vertex: &Self::Vertex, scatter: &Self::Scatter) -> Self::Output;
}

/// Initial state of one master.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexInit<V, S> {
    pub vertex: V,
    pub scatter: S,
    pub active: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Execution lanes per worker.
    pub lanes: usize,
    /// Bytes per message buffer, header included.
    pub buffer_capacity: usize,
    pub lock_table_size: usize,
    /// Seeded permutation of vertex and message processing order.
    pub shuffle_seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            lanes: 1,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            lock_table_size: DEFAULT_LOCK_TABLE_SIZE,
            shuffle_seed: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.lanes == 0 {
            return Err(EngineError::Config("lanes must be >= 1".into()));
        }
        if self.lock_table_size == 0 {
            return Err(EngineError::Config("lock table size must be >= 1".into()));
        }
        if self.buffer_capacity < wire::HEADER_LEN + wire::DEST_LEN + 16 {
            return Err(EngineError::Config(format!(
                "buffer capacity {} cannot hold one record",
                self.buffer_capacity
            )));
        }
        Ok(())
    }
}

/// Per-partition counters for one superstep.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounters {
    pub partition: u32,
    /// Vertices (masters and agents) that ran scatter along their edges.
    pub scatters: u64,
    /// `combine` invocations.
    pub combines: u64,
    pub applies: u64,
    pub buffers_sent: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperstepReport {
    pub superstep: u64,
    pub partitions: Vec<PartitionCounters>,
    /// Scatter-active masters after the superstep.
    pub active_scatter: u64,
}

impl SuperstepReport {
    pub fn messages_sent(&self) -> u64 {
        self.partitions.iter().map(|p| p.messages_sent).sum()
    }

    pub fn messages_received(&self) -> u64 {
        self.partitions.iter().map(|p| p.messages_received).sum()
    }

    pub fn applies(&self) -> u64 {
        self.partitions.iter().map(|p| p.applies).sum()
    }
}

/// Runtime columns of one partition.
///
/// `scatter_data` covers masters then scatter agents; `combine_data` covers
/// masters then combiner agents. Both are distinct storage.
#[derive(Debug)]
pub struct RuntimeState<P: VertexProgram> {
    pub(crate) vertex_data: PropertyColumn<P::Vertex>,
    pub(crate) scatter_data: PropertyColumn<P::Scatter>,
    pub(crate) combine_data: LockedColumn<P::Message>,
    pub(crate) active_scatter: Bitmap,
    pub(crate) active_apply: Bitmap,
}

impl<P: VertexProgram> RuntimeState<P> {
    pub fn vertex_data(&self) -> &[P::Vertex] {
        self.vertex_data.as_slice()
    }

    pub fn scatter_data(&self) -> &[P::Scatter] {
        self.scatter_data.as_slice()
    }

    pub fn combine_data(&mut self) -> &[P::Message] {
        self.combine_data.as_slice()
    }

    pub fn is_scatter_active(&self, master: LocalVertexId) -> bool {
        self.active_scatter.get(master.index())
    }

    pub fn is_apply_active(&self, master: LocalVertexId) -> bool {
        self.active_apply.get(master.index())
    }

    pub fn active_scatter_count(&self) -> u64 {
        self.active_scatter.count_ones()
    }
}

/// Combine-column slot of a master or combiner agent.
#[inline]
pub(crate) fn combine_slot(part: &AgentGraphPartition, l: LocalVertexId) -> usize {
    let n = part.master_count();
    if l.index() < n {
        l.index()
    } else {
        l.index() - part.scatter_count()
    }
}

pub struct Engine<'a, P: VertexProgram> {
    parts: &'a [AgentGraphPartition],
    program: &'a P,
    config: EngineConfig,
    states: Vec<RuntimeState<P>>,
    locks: Vec<LockTable>,
    pools: Vec<Option<Arc<rayon::ThreadPool>>>,
    superstep: u64,
}

impl<'a, P: VertexProgram> Engine<'a, P> {
    /// Sets every master from `init`, every combine cell to the identity and
    /// clears all apply flags.
    pub fn init_run<F>(
        parts: &'a [AgentGraphPartition],
        program: &'a P,
        config: EngineConfig,
        init: F,
    ) -> Result<Self, EngineError>
    where
        F: Fn(GlobalVertexId) -> Option<VertexInit<P::Vertex, P::Scatter>>,
    {
        let mut states = Vec::with_capacity(parts.len());
        for part in parts {
            let n = part.master_count();
            let mut vertex = Vec::with_capacity(n);
            let mut scatter = Vec::with_capacity(n + part.scatter_count());
            let active = Bitmap::new(n);
            for (j, &g) in part.masters().iter().enumerate() {
                let v = init(g).ok_or(EngineError::MissingInit(g))?;
                vertex.push(v.vertex);
                scatter.push(v.scatter);
                if v.active {
                    active.set(j);
                }
            }
            states.push(Self::fresh_state(program, part, vertex, scatter, active));
        }
        Self::assemble(parts, program, config, states, 0)
    }

    fn fresh_state(
        program: &P,
        part: &AgentGraphPartition,
        vertex: Vec<P::Vertex>,
        mut scatter: Vec<P::Scatter>,
        active_scatter: Bitmap,
    ) -> RuntimeState<P> {
        let n = part.master_count();
        // agent slots are overwritten by each relayed payload
        let blank = P::Scatter::read_from(&vec![0u8; P::Scatter::WIDTH]);
        scatter.resize(n + part.scatter_count(), blank);
        let len = scatter.len();
        RuntimeState {
            vertex_data: PropertyColumn::load("vertex_data", vertex, n).unwrap(),
            scatter_data: PropertyColumn::load("scatter_data", scatter, len).unwrap(),
            combine_data: LockedColumn::filled(n + part.combiner_count(), program.combine_identity()),
            active_scatter,
            active_apply: Bitmap::new(n),
        }
    }

    fn assemble(
        parts: &'a [AgentGraphPartition],
        program: &'a P,
        config: EngineConfig,
        states: Vec<RuntimeState<P>>,
        superstep: u64,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        for (i, p) in parts.iter().enumerate() {
            if p.index() != i as u32 || p.k() != parts.len() as u32 {
                return Err(EngineError::Config(format!(
                    "partition at position {i} is {} of {}",
                    p.index(),
                    p.k()
                )));
            }
        }
        let pools = (0..parts.len())
            .map(|i| {
                if config.lanes > 1 {
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(config.lanes)
                        .thread_name(move |t| format!("worker-{i}-lane-{t}"))
                        .build()
                        .map(|p| Some(Arc::new(p)))
                        .map_err(|e| EngineError::Config(e.to_string()))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Engine {
            parts,
            program,
            config,
            locks: (0..parts.len()).map(|_| LockTable::new(config.lock_table_size)).collect(),
            states,
            pools,
            superstep,
        })
    }

    pub fn partitions(&self) -> &[AgentGraphPartition] {
        self.parts
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Supersteps completed so far.
    pub fn superstep(&self) -> u64 {
        self.superstep
    }

    pub fn states(&self) -> &[RuntimeState<P>] {
        &self.states
    }

    pub fn state_mut(&mut self, part: usize) -> &mut RuntimeState<P> {
        &mut self.states[part]
    }

    pub fn active_scatter_count(&self) -> u64 {
        self.states.iter().map(|s| s.active_scatter_count()).sum()
    }

    /// True when every combiner agent holds the combine identity.
    pub fn combiners_at_identity(&mut self) -> bool {
        let id = self.program.combine_identity();
        self.parts.iter().zip(&mut self.states).all(|(p, s)| {
            s.combine_data.as_slice()[p.master_count()..]
                .iter()
                .all(|c| *c == id)
        })
    }

    /// Runs one superstep: phase 1 (scatter-combine) then phase 2 (apply).
    pub fn run_superstep(&mut self) -> Result<SuperstepReport, EngineError> {
        let report = worker::superstep(
            self.parts,
            self.program,
            &self.config,
            &mut self.states,
            &self.locks,
            &self.pools,
            self.superstep,
        )?;
        self.superstep += 1;
        Ok(report)
    }

    /// Runs supersteps until no master is scatter-active after one, or until
    /// `max_supersteps` more have run. At least one superstep runs.
    pub fn run_to_termination(
        &mut self,
        max_supersteps: Option<u64>,
    ) -> Result<Vec<SuperstepReport>, EngineError> {
        self.run_with(max_supersteps, |_| {})
    }

    /// Like [`Engine::run_to_termination`], calling `observe` after each
    /// superstep.
    pub fn run_with(
        &mut self,
        max_supersteps: Option<u64>,
        mut observe: impl FnMut(&SuperstepReport),
    ) -> Result<Vec<SuperstepReport>, EngineError> {
        let mut reports = Vec::new();
        loop {
            if max_supersteps.is_some_and(|m| reports.len() as u64 >= m) {
                break;
            }
            let r = self.run_superstep()?;
            observe(&r);
            let done = r.active_scatter == 0;
            reports.push(r);
            if done {
                break;
            }
        }
        Ok(reports)
    }

    /// Per-vertex program output, sorted by global id.
    pub fn output(&self) -> Vec<(GlobalVertexId, P::Output)> {
        let mut out: Vec<(GlobalVertexId, P::Output)> = self
            .parts
            .iter()
            .zip(&self.states)
            .flat_map(|(p, s)| {
                p.masters().iter().enumerate().map(move |(j, &g)| {
                    (
                        g,
                        self.program
                            .output(&s.vertex_data.as_slice()[j], &s.scatter_data.as_slice()[j]),
                    )
                })
            })
            .collect();
        out.sort_unstable_by_key(|(g, _)| *g);
        out
    }

    /// Writes a snapshot of master vertex/scatter data and both activation
    /// bitmaps. Agent state is not saved.
    pub fn checkpoint(&self, path: impl AsRef<std::path::Path>) -> Result<(), EngineError> {
        checkpoint::write(path.as_ref(), self.parts, &self.states, self.superstep, self.program)
    }

    /// Rebuilds an engine from a snapshot taken on the same partitions.
    pub fn restore(
        parts: &'a [AgentGraphPartition],
        program: &'a P,
        config: EngineConfig,
        path: impl AsRef<std::path::Path>,
    ) -> Result<Self, EngineError> {
        let snap = checkpoint::read::<P>(path.as_ref(), parts, program)?;
        let states = parts
            .iter()
            .zip(snap.parts)
            .map(|(part, s)| Self::fresh_state(program, part, s.vertex, s.scatter, s.active_scatter))
            .zip(snap.apply)
            .map(|(mut st, apply)| {
                st.active_apply = apply;
                st
            })
            .collect();
        Self::assemble(parts, program, config, states, snap.superstep)
    }
}

#[cfg(test)]
mod tests;

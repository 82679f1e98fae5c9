use std::collections::HashMap;

use rayon::prelude::*;
use smallvec::SmallVec;

use super::{hash_place, PartitionError, PartitionMode, PlacementResult};
use crate::graph::{CsrGraph, DirectedGraph, Edge, EdgeStream, GlobalVertexId, IdIndex, LocalVertexId, PropertyColumn};

/// Role of a local vertex within one partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexClass {
    Master,
    /// Receives one message from its remote master and relays it along local
    /// out-edges.
    Scatter,
    /// Folds incoming messages for its remote master and forwards one.
    Combiner,
}

/// Rows of variable length stored as offsets plus a flat value array.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ragged<T> {
    offsets: Vec<u64>,
    values: Vec<T>,
}

impl<T: Copy> Ragged<T> {
    pub fn from_rows<I, R>(rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = T>,
    {
        let mut offsets = vec![0u64];
        let mut values = Vec::new();
        for row in rows {
            values.extend(row);
            offsets.push(values.len() as u64);
        }
        Ragged { offsets, values }
    }

    pub fn from_raw(offsets: Vec<u64>, values: Vec<T>) -> Option<Self> {
        let ok = !offsets.is_empty()
            && offsets[0] == 0
            && offsets.windows(2).all(|w| w[0] <= w[1])
            && *offsets.last().unwrap() as usize == values.len();
        ok.then_some(Ragged { offsets, values })
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// One worker's share of the agent graph.
///
/// Local ids: masters `0..n` in ascending global-id order, then scatter
/// agents, then combiner agents. The CSR stores only ordinary edges; the
/// master→scatter and combiner→master links are implicit in
/// `scatter_placement` and the combiner id index.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentGraphPartition {
    pub(crate) index: u32,
    pub(crate) k: u32,
    pub(crate) csr: CsrGraph,
    pub(crate) masters: IdIndex,
    pub(crate) scatters: IdIndex,
    pub(crate) combiners: IdIndex,
    pub(crate) scatter_owner: Vec<u32>,
    pub(crate) combiner_owner: Vec<u32>,
    pub(crate) scatter_placement: Ragged<u32>,
    pub(crate) combiner_presence: Ragged<u32>,
    /// Whole-graph out-degree for masters and scatter agents.
    pub(crate) out_degree: Vec<u64>,
    pub(crate) edge_weights: Option<PropertyColumn<u32>>,
}

impl AgentGraphPartition {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn master_count(&self) -> usize {
        self.masters.len()
    }

    pub fn scatter_count(&self) -> usize {
        self.scatters.len()
    }

    pub fn combiner_count(&self) -> usize {
        self.combiners.len()
    }

    pub fn local_count(&self) -> usize {
        self.master_count() + self.scatter_count() + self.combiner_count()
    }

    pub fn csr(&self) -> &CsrGraph {
        &self.csr
    }

    /// Ordinary (non agent-extended) edges stored here.
    pub fn edge_count(&self) -> usize {
        self.csr.edge_count()
    }

    pub fn masters(&self) -> &[GlobalVertexId] {
        self.masters.globals()
    }

    pub fn scatter_globals(&self) -> &[GlobalVertexId] {
        self.scatters.globals()
    }

    pub fn combiner_globals(&self) -> &[GlobalVertexId] {
        self.combiners.globals()
    }

    pub fn master_index(&self) -> &IdIndex {
        &self.masters
    }

    pub fn scatter_index(&self) -> &IdIndex {
        &self.scatters
    }

    pub fn combiner_index(&self) -> &IdIndex {
        &self.combiners
    }

    #[inline]
    pub fn class_of(&self, l: LocalVertexId) -> VertexClass {
        let n = self.masters.len() as u32;
        let s = self.scatters.len() as u32;
        if l.0 < n {
            VertexClass::Master
        } else if l.0 < n + s {
            VertexClass::Scatter
        } else {
            VertexClass::Combiner
        }
    }

    /// Global id of any local vertex; agents map to their master's id.
    pub fn global_of(&self, l: LocalVertexId) -> Option<GlobalVertexId> {
        match self.class_of(l) {
            VertexClass::Master => self.masters.to_global(l),
            VertexClass::Scatter => self.scatters.to_global(l),
            VertexClass::Combiner => self.combiners.to_global(l),
        }
    }

    pub fn local_of(&self, class: VertexClass, g: GlobalVertexId) -> Option<LocalVertexId> {
        match class {
            VertexClass::Master => self.masters.to_local(g),
            VertexClass::Scatter => self.scatters.to_local(g),
            VertexClass::Combiner => self.combiners.to_local(g),
        }
    }

    /// Partition owning the master of scatter agent `l`.
    pub fn scatter_owner(&self, l: LocalVertexId) -> u32 {
        self.scatter_owner[(l.0 - self.scatters.base()) as usize]
    }

    /// Partition owning the master of combiner agent `l`.
    pub fn combiner_owner(&self, l: LocalVertexId) -> u32 {
        self.combiner_owner[(l.0 - self.combiners.base()) as usize]
    }

    /// Remote partitions holding a scatter agent of master `l`.
    pub fn scatter_placement(&self, l: LocalVertexId) -> &[u32] {
        self.scatter_placement.row(l.index())
    }

    /// Remote partitions holding a combiner agent of master `l`.
    pub fn combiner_presence(&self, l: LocalVertexId) -> &[u32] {
        self.combiner_presence.row(l.index())
    }

    /// Whole-graph out-degree of a master or of a scatter agent's master.
    pub fn global_out_degree(&self, l: LocalVertexId) -> u64 {
        self.out_degree[l.index()]
    }

    pub fn is_weighted(&self) -> bool {
        self.edge_weights.is_some()
    }

    pub fn edge_weights(&self) -> Option<&PropertyColumn<u32>> {
        self.edge_weights.as_ref()
    }

    #[inline]
    pub fn edge_weight(&self, slot: usize) -> Option<u32> {
        self.edge_weights.as_ref().map(|w| w[slot])
    }

    /// Checks the local structural invariants of one partition.
    pub fn validate(&self) -> Result<(), PartitionError> {
        let fail = |message: String| PartitionError::Invariant {
            part: self.index,
            message,
        };
        let n = self.master_count();
        let s = self.scatter_count();
        let c = self.combiner_count();
        if self.masters.base() != 0 || self.scatters.base() as usize != n || self.combiners.base() as usize != n + s {
            return Err(fail("local id blocks are not masters, scatters, combiners in order".into()));
        }
        if self.csr.vertex_count() != n + s + c {
            return Err(fail(format!(
                "csr has {} rows for {} local vertices",
                self.csr.vertex_count(),
                n + s + c
            )));
        }
        if self.masters.globals().windows(2).any(|w| w[0] >= w[1]) {
            return Err(fail("masters are not numbered in ascending global order".into()));
        }
        if self.scatter_owner.len() != s || self.combiner_owner.len() != c {
            return Err(fail("agent owner tables misaligned".into()));
        }
        if self.scatter_placement.rows() != n || self.combiner_presence.rows() != n {
            return Err(fail("placement tables must have one row per master".into()));
        }
        if self.out_degree.len() != n + s {
            return Err(fail("out-degree table misaligned".into()));
        }
        if let Some(w) = &self.edge_weights {
            if w.len() != self.csr.edge_count() {
                return Err(fail("edge weight column misaligned".into()));
            }
        }
        let in_deg = self.csr.in_degrees();
        for j in 0..s {
            let l = LocalVertexId((n + j) as u32);
            if self.csr.out_degree(l) == 0 {
                return Err(fail(format!("scatter agent {l} has no out-edges")));
            }
            if in_deg[l.index()] != 0 {
                return Err(fail(format!("scatter agent {l} has an ordinary in-edge")));
            }
            if self.scatter_owner[j] == self.index || self.scatter_owner[j] >= self.k {
                return Err(fail(format!("scatter agent {l} has invalid owner")));
            }
        }
        for j in 0..c {
            let l = LocalVertexId((n + s + j) as u32);
            if self.csr.out_degree(l) != 0 {
                return Err(fail(format!("combiner {l} has an ordinary out-edge")));
            }
            if in_deg[l.index()] == 0 {
                return Err(fail(format!("combiner {l} has no in-edges")));
            }
            if self.combiner_owner[j] == self.index || self.combiner_owner[j] >= self.k {
                return Err(fail(format!("combiner {l} has invalid owner")));
            }
        }
        for m in 0..n {
            let rows = [
                self.scatter_placement.row(m),
                self.combiner_presence.row(m),
            ];
            for row in rows {
                if row.iter().any(|&p| p == self.index || p >= self.k)
                    || row.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(fail(format!("master {m} has a malformed agent placement row")));
                }
            }
        }
        Ok(())
    }
}

/// Dense vertex numbering plus every edge as a pair of dense ids.
type DenseEdges = (HashMap<GlobalVertexId, u32>, Vec<(u32, u32)>);

fn dense_endpoints(graph: &DirectedGraph) -> Result<DenseEdges, PartitionError> {
    let dense: HashMap<GlobalVertexId, u32> = graph
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, &g)| (g, i as u32))
        .collect();
    let ends = graph
        .edges()
        .iter()
        .map(|e| {
            let s = *dense.get(&e.source).ok_or(PartitionError::UnknownVertex(e.source))?;
            let t = *dense.get(&e.target).ok_or(PartitionError::UnknownVertex(e.target))?;
            Ok((s, t))
        })
        .collect::<Result<Vec<_>, PartitionError>>()?;
    Ok((dense, ends))
}

/// Owner partition of every vertex.
///
/// Hash placement shards vertices by `mix64(id) mod k`. Greedy placements
/// give each vertex to the partition holding most of its incident edges,
/// ties to the lowest index; vertices without edges fall back to hashing.
fn resolve_owners(
    graph: &DirectedGraph,
    ends: &[(u32, u32)],
    placement: &PlacementResult,
) -> Vec<u32> {
    let k = placement.k as usize;
    let verts = graph.vertices();
    if placement.mode == PartitionMode::Hash {
        return verts.iter().map(|&g| hash_place(g, k) as u32).collect();
    }
    let mut counts = vec![0u32; verts.len() * k];
    for (&(s, t), &p) in ends.iter().zip(&placement.assignment) {
        counts[s as usize * k + p as usize] += 1;
        if t != s {
            counts[t as usize * k + p as usize] += 1;
        }
    }
    verts
        .iter()
        .enumerate()
        .map(|(v, &g)| {
            let row = &counts[v * k..(v + 1) * k];
            let mut best = 0usize;
            for (i, &c) in row.iter().enumerate() {
                if c > row[best] {
                    best = i;
                }
            }
            if row[best] == 0 {
                hash_place(g, k) as u32
            } else {
                best as u32
            }
        })
        .collect()
}

/// Builds the `k` agent-graph partitions for `placement`.
///
/// Each edge stays whole on the partition it was placed on (self-loops move to
/// their vertex's owner). Its source is the local master if owned there, else
/// a scatter agent; its target is the local master or a combiner agent.
pub fn build_agent_graph(
    graph: &DirectedGraph,
    placement: &PlacementResult,
) -> Result<Vec<AgentGraphPartition>, PartitionError> {
    let k = placement.k as usize;
    if k == 0 {
        return Err(PartitionError::ZeroPartitions);
    }
    let edges = graph.edges().edges();
    if placement.assignment.len() != edges.len() {
        return Err(PartitionError::PlacementLength {
            placement: placement.assignment.len(),
            edges: edges.len(),
        });
    }
    if let Some((i, &p)) = placement
        .assignment
        .iter()
        .enumerate()
        .find(|(_, &p)| p as usize >= k)
    {
        return Err(PartitionError::PlacementOutOfRange {
            edge: i,
            part: p,
            k: k as u32,
        });
    }
    let (_, ends) = dense_endpoints(graph)?;
    let verts = graph.vertices();
    let n_total = verts.len();
    let owner = resolve_owners(graph, &ends, placement);

    let place: Vec<u32> = ends
        .iter()
        .zip(&placement.assignment)
        .map(|(&(s, t), &p)| if s == t { owner[s as usize] } else { p })
        .collect();

    let mut masters: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut master_local = vec![0u32; n_total];
    for v in 0..n_total {
        let list = &mut masters[owner[v] as usize];
        master_local[v] = list.len() as u32;
        list.push(v as u32);
    }

    let mut out_degree = vec![0u64; n_total];
    for &(s, _) in &ends {
        out_degree[s as usize] += 1;
    }

    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, &p) in place.iter().enumerate() {
        buckets[p as usize].push(i as u32);
    }

    // agent sets per partition, sorted by dense id (= global id order)
    let agents: Vec<(Vec<u32>, Vec<u32>)> = buckets
        .par_iter()
        .enumerate()
        .map(|(i, bucket)| {
            let mut scat = Vec::new();
            let mut comb = Vec::new();
            for &ei in bucket {
                let (s, t) = ends[ei as usize];
                if owner[s as usize] as usize != i {
                    scat.push(s);
                }
                if owner[t as usize] as usize != i {
                    comb.push(t);
                }
            }
            scat.sort_unstable();
            scat.dedup();
            comb.sort_unstable();
            comb.dedup();
            (scat, comb)
        })
        .collect();

    let mut splace: Vec<SmallVec<[u32; 2]>> = vec![SmallVec::new(); n_total];
    let mut cpresence: Vec<SmallVec<[u32; 2]>> = vec![SmallVec::new(); n_total];
    for (i, (scat, comb)) in agents.iter().enumerate() {
        for &u in scat {
            splace[u as usize].push(i as u32);
        }
        for &v in comb {
            cpresence[v as usize].push(i as u32);
        }
    }

    let weighted = graph.edges().is_weighted();
    buckets
        .into_par_iter()
        .zip(agents.into_par_iter())
        .enumerate()
        .map(|(i, (bucket, (scat, comb)))| {
            let n = masters[i].len();
            let s = scat.len();
            let scat_local: HashMap<u32, u32> = scat
                .iter()
                .enumerate()
                .map(|(j, &u)| (u, (n + j) as u32))
                .collect();
            let comb_local: HashMap<u32, u32> = comb
                .iter()
                .enumerate()
                .map(|(j, &v)| (v, (n + s + j) as u32))
                .collect();
            let pairs: Vec<(LocalVertexId, LocalVertexId)> = bucket
                .iter()
                .map(|&ei| {
                    let (su, tv) = ends[ei as usize];
                    let src = if owner[su as usize] as usize == i {
                        master_local[su as usize]
                    } else {
                        scat_local[&su]
                    };
                    let tgt = if owner[tv as usize] as usize == i {
                        master_local[tv as usize]
                    } else {
                        comb_local[&tv]
                    };
                    (LocalVertexId(src), LocalVertexId(tgt))
                })
                .collect();
            let local_count = n + s + comb.len();
            let (csr, order) = CsrGraph::build_with_order(&pairs, local_count)?;
            let edge_weights = if weighted {
                let w: Vec<u32> = order
                    .iter()
                    .map(|&j| edges[bucket[j] as usize].weight.unwrap_or(0))
                    .collect();
                Some(PropertyColumn::load("weight", w, csr.edge_count())?)
            } else {
                None
            };
            let gid = |v: &u32| verts[*v as usize];
            let part = AgentGraphPartition {
                index: i as u32,
                k: k as u32,
                csr,
                masters: IdIndex::new(0, masters[i].iter().map(gid).collect())?,
                scatters: IdIndex::new(n as u32, scat.iter().map(gid).collect())?,
                combiners: IdIndex::new((n + s) as u32, comb.iter().map(gid).collect())?,
                scatter_owner: scat.iter().map(|&u| owner[u as usize]).collect(),
                combiner_owner: comb.iter().map(|&v| owner[v as usize]).collect(),
                scatter_placement: Ragged::from_rows(
                    masters[i].iter().map(|&m| splace[m as usize].iter().copied()),
                ),
                combiner_presence: Ragged::from_rows(
                    masters[i].iter().map(|&m| cpresence[m as usize].iter().copied()),
                ),
                out_degree: masters[i]
                    .iter()
                    .chain(scat.iter())
                    .map(|&v| out_degree[v as usize])
                    .collect(),
                edge_weights,
            };
            Ok(part)
        })
        .collect()
}

/// Recovers the input graph from its partitions: every master is a vertex and
/// every stored edge is listed once, in partition then CSR order.
pub fn graph_from_partitions(parts: &[AgentGraphPartition]) -> DirectedGraph {
    let weighted = parts.iter().all(|p| p.is_weighted()) && !parts.is_empty();
    let mut edges = Vec::with_capacity(parts.iter().map(|p| p.edge_count()).sum());
    for p in parts {
        let csr = p.csr();
        for src in 0..(p.master_count() + p.scatter_count()) {
            let l = LocalVertexId(src as u32);
            let s = p.global_of(l).expect("source slot is a master or scatter");
            for slot in csr.edge_range(l) {
                let t = p.global_of(csr.column_indices()[slot]).expect("edge target is local");
                edges.push(match p.edge_weight(slot) {
                    Some(w) if weighted => Edge::weighted(s.0, t.0, w),
                    _ => Edge::new(s.0, t.0),
                });
            }
        }
    }
    let vertices = parts.iter().flat_map(|p| p.masters().iter().copied());
    DirectedGraph::with_vertices(vertices, EdgeStream::from_parts(edges, weighted))
}

/// Checks the cross-partition invariants against the source graph: masters
/// partition the vertex set, ordinary edges are conserved, agent placement
/// tables agree with the agents actually present, and recorded out-degrees
/// equal the whole-graph out-degrees.
pub fn validate_partitions(
    parts: &[AgentGraphPartition],
    graph: &DirectedGraph,
) -> Result<(), PartitionError> {
    let global = |message: String| PartitionError::Invariant {
        part: u32::MAX,
        message,
    };
    let k = parts.len() as u32;
    for (i, p) in parts.iter().enumerate() {
        if p.index != i as u32 || p.k != k {
            return Err(global(format!("partition {i} carries index {} of {}", p.index, p.k)));
        }
        p.validate()?;
    }

    let mut all_masters: Vec<GlobalVertexId> =
        parts.iter().flat_map(|p| p.masters().iter().copied()).collect();
    all_masters.sort_unstable();
    if all_masters.windows(2).any(|w| w[0] == w[1]) {
        return Err(global("a vertex is master on more than one partition".into()));
    }
    if all_masters != graph.vertices() {
        return Err(global("master sets do not cover the vertex set".into()));
    }

    let total: usize = parts.iter().map(|p| p.edge_count()).sum();
    if total != graph.edge_count() {
        return Err(global(format!(
            "partitions hold {total} ordinary edges, graph has {}",
            graph.edge_count()
        )));
    }

    let owner: HashMap<GlobalVertexId, (u32, LocalVertexId)> = parts
        .iter()
        .flat_map(|p| {
            p.masters()
                .iter()
                .enumerate()
                .map(move |(j, &g)| (g, (p.index, LocalVertexId(j as u32))))
        })
        .collect();

    let mut placed_out: HashMap<GlobalVertexId, u64> = HashMap::new();
    let mut scatter_total = 0usize;
    let mut combiner_total = 0usize;
    for p in parts {
        for (j, &g) in p.scatter_globals().iter().enumerate() {
            let (own, ml) = owner[&g];
            if p.scatter_owner[j] != own || !parts[own as usize].scatter_placement(ml).contains(&p.index) {
                return Err(global(format!("scatter agent of {g} on {} not registered", p.index)));
            }
        }
        for (j, &g) in p.combiner_globals().iter().enumerate() {
            let (own, ml) = owner[&g];
            if p.combiner_owner[j] != own || !parts[own as usize].combiner_presence(ml).contains(&p.index) {
                return Err(global(format!("combiner of {g} on {} not registered", p.index)));
            }
        }
        scatter_total += p.scatter_count();
        combiner_total += p.combiner_count();
        for l in 0..(p.master_count() + p.scatter_count()) as u32 {
            let l = LocalVertexId(l);
            *placed_out.entry(p.global_of(l).unwrap()).or_default() += p.csr.out_degree(l) as u64;
        }
    }
    let registered_s: usize = parts.iter().map(|p| p.scatter_placement.values().len()).sum();
    let registered_c: usize = parts.iter().map(|p| p.combiner_presence.values().len()).sum();
    if registered_s != scatter_total || registered_c != combiner_total {
        return Err(global("agent placement tables list agents that do not exist".into()));
    }

    let degrees = graph.out_degrees();
    for p in parts {
        for l in 0..(p.master_count() + p.scatter_count()) as u32 {
            let l = LocalVertexId(l);
            let g = p.global_of(l).unwrap();
            if p.global_out_degree(l) != degrees[&g] || placed_out[&g] != degrees[&g] {
                return Err(global(format!("out-degree of {g} inconsistent")));
            }
        }
    }
    Ok(())
}

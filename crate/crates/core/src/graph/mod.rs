//! Directed property graph primitives shared by every other module.
//!
//! Vertices carry a user-visible 64-bit [`GlobalVertexId`]. Inside a partition
//! they are renumbered with dense 32-bit [`LocalVertexId`]s and the topology is
//! stored as a [`CsrGraph`]; properties live in flat [`PropertyColumn`]s.

mod column;
mod csr;
mod id_index;
pub mod io;

pub use column::PropertyColumn;
pub use csr::CsrGraph;
pub use id_index::IdIndex;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// User-visible vertex identity. Unique per vertex, not necessarily dense.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(transparent)]
pub struct GlobalVertexId(pub u64);

/// Partition-local vertex number. Masters occupy `0..n`, agents follow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct LocalVertexId(pub u32);

impl GlobalVertexId {
    /// Sentinel used by label-style programs for "no vertex".
    pub const NONE: GlobalVertexId = GlobalVertexId(u64::MAX);
}

impl LocalVertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u64> for GlobalVertexId {
    fn from(v: u64) -> Self {
        GlobalVertexId(v)
    }
}

impl From<u32> for LocalVertexId {
    fn from(v: u32) -> Self {
        LocalVertexId(v)
    }
}

impl fmt::Display for GlobalVertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for LocalVertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge ({source_index}, {target_index}) out of range for {vertex_count} vertices")]
    IndexOutOfRange {
        source_index: u32,
        target_index: u32,
        vertex_count: usize,
    },
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: u32, vertex_count: usize },
    #[error("duplicate global id {0} in index")]
    DuplicateGlobalId(GlobalVertexId),
    #[error("column `{name}` has {actual} items, expected {expected}")]
    ColumnLength {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("edge stream mixes weighted and unweighted edges")]
    MixedWeights,
    #[error("binary edge list length {0} is not a multiple of the record width")]
    TruncatedBinary(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One directed input edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: GlobalVertexId,
    pub target: GlobalVertexId,
    pub weight: Option<u32>,
}

impl Edge {
    pub fn new(source: u64, target: u64) -> Self {
        Edge {
            source: GlobalVertexId(source),
            target: GlobalVertexId(target),
            weight: None,
        }
    }

    pub fn weighted(source: u64, target: u64, weight: u32) -> Self {
        Edge {
            source: GlobalVertexId(source),
            target: GlobalVertexId(target),
            weight: Some(weight),
        }
    }

    #[inline]
    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

/// Ordered edge list. Either every edge carries a weight or none does.
/// Duplicates and self-loops are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeStream {
    edges: Vec<Edge>,
    weighted: bool,
}

impl EdgeStream {
    pub fn new(edges: Vec<Edge>) -> Result<Self, GraphError> {
        let weighted = edges.first().is_some_and(|e| e.weight.is_some());
        if edges.iter().any(|e| e.weight.is_some() != weighted) {
            return Err(GraphError::MixedWeights);
        }
        Ok(EdgeStream { edges, weighted })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        EdgeStream {
            edges: pairs.into_iter().map(|(u, v)| Edge::new(u, v)).collect(),
            weighted: false,
        }
    }

    pub fn from_weighted(triples: impl IntoIterator<Item = (u64, u64, u32)>) -> Self {
        let edges: Vec<Edge> = triples
            .into_iter()
            .map(|(u, v, w)| Edge::weighted(u, v, w))
            .collect();
        // an empty list has no weights to speak of
        let weighted = !edges.is_empty();
        EdgeStream { edges, weighted }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<Edge> {
        self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edge> {
        self.edges.iter()
    }

    /// Undirected view: every edge `(u, v)` also yields `(v, u)`. Self-loops
    /// are emitted once.
    pub fn symmetrized(&self) -> EdgeStream {
        let mut edges = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            edges.push(*e);
            if !e.is_self_loop() {
                edges.push(Edge {
                    source: e.target,
                    target: e.source,
                    weight: e.weight,
                });
            }
        }
        EdgeStream {
            edges,
            weighted: self.weighted,
        }
    }

    /// Drops weights, keeping topology.
    pub fn unweighted(&self) -> EdgeStream {
        EdgeStream {
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    weight: None,
                    ..*e
                })
                .collect(),
            weighted: false,
        }
    }

    pub(crate) fn from_parts(edges: Vec<Edge>, weighted: bool) -> Self {
        EdgeStream { edges, weighted }
    }
}

impl<'a> IntoIterator for &'a EdgeStream {
    type Item = &'a Edge;
    type IntoIter = std::slice::Iter<'a, Edge>;

    fn into_iter(self) -> Self::IntoIter {
        self.edges.iter()
    }
}

/// Full directed graph: an explicit vertex set plus its edge stream.
///
/// Vertices that appear in no edge are allowed (R-MAT output contains many).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    vertices: Vec<GlobalVertexId>,
    edges: EdgeStream,
}

impl DirectedGraph {
    /// Vertex set = endpoints of `edges`.
    pub fn from_edges(edges: EdgeStream) -> Self {
        let set: BTreeSet<GlobalVertexId> = edges
            .iter()
            .flat_map(|e| [e.source, e.target])
            .collect();
        DirectedGraph {
            vertices: set.into_iter().collect(),
            edges,
        }
    }

    /// Vertex set = `vertices` ∪ endpoints of `edges`.
    pub fn with_vertices(
        vertices: impl IntoIterator<Item = GlobalVertexId>,
        edges: EdgeStream,
    ) -> Self {
        let mut set: BTreeSet<GlobalVertexId> = vertices.into_iter().collect();
        set.extend(edges.iter().flat_map(|e| [e.source, e.target]));
        DirectedGraph {
            vertices: set.into_iter().collect(),
            edges,
        }
    }

    /// Sorted, duplicate-free.
    pub fn vertices(&self) -> &[GlobalVertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &EdgeStream {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.vertices.is_empty() {
            0.0
        } else {
            self.edges.len() as f64 / self.vertices.len() as f64
        }
    }

    pub fn symmetrized(&self) -> DirectedGraph {
        DirectedGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.symmetrized(),
        }
    }

    /// Global out-degree of every vertex (multi-edges counted).
    pub fn out_degrees(&self) -> HashMap<GlobalVertexId, u64> {
        let mut deg: HashMap<GlobalVertexId, u64> =
            self.vertices.iter().map(|&v| (v, 0)).collect();
        for e in &self.edges {
            *deg.entry(e.source).or_default() += 1;
        }
        deg
    }

    /// In-edges of `v` as `(source, weight)` pairs, in stream order. Only the
    /// full pre-partition graph answers in-edge queries.
    pub fn in_edges(&self, v: GlobalVertexId) -> Vec<(GlobalVertexId, Option<u32>)> {
        self.edges
            .iter()
            .filter(|e| e.target == v)
            .map(|e| (e.source, e.weight))
            .collect()
    }
}

/// Selects the ids satisfying `rule`, preserving order and duplicates.
pub fn filter_vertices<F>(ids: &[GlobalVertexId], rule: F) -> Vec<GlobalVertexId>
where
    F: Fn(GlobalVertexId) -> bool,
{
    ids.iter().copied().filter(|&v| rule(v)).collect()
}

/// Selects the edges satisfying `rule`, preserving order.
pub fn filter_edges<F>(edges: &EdgeStream, rule: F) -> EdgeStream
where
    F: Fn(&Edge) -> bool,
{
    EdgeStream::from_parts(
        edges.iter().filter(|e| rule(e)).copied().collect(),
        edges.is_weighted(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gids(v: &[u64]) -> Vec<GlobalVertexId> {
        v.iter().map(|&x| GlobalVertexId(x)).collect()
    }

    #[test]
    fn filter_selects_even() {
        assert_eq!(filter_vertices(&gids(&[1, 2, 3]), |v| v.0 % 2 == 0), gids(&[2]));
    }

    #[test]
    fn filter_empty() {
        assert!(filter_vertices(&[], |_| true).is_empty());
    }

    #[test]
    fn filter_keeps_duplicates() {
        assert_eq!(filter_vertices(&gids(&[4, 4]), |_| true), gids(&[4, 4]));
    }

    #[test]
    fn mixed_weights_rejected() {
        let edges = vec![Edge::new(0, 1), Edge::weighted(1, 2, 3)];
        assert!(matches!(EdgeStream::new(edges), Err(GraphError::MixedWeights)));
    }

    #[test]
    fn symmetrize_skips_reverse_of_self_loop() {
        let s = EdgeStream::from_pairs([(0, 1), (2, 2)]).symmetrized();
        let pairs: Vec<_> = s.iter().map(|e| (e.source.0, e.target.0)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn graph_vertex_set_includes_isolated() {
        let g = DirectedGraph::with_vertices(gids(&[9]), EdgeStream::from_pairs([(0, 1)]));
        assert_eq!(g.vertices(), &gids(&[0, 1, 9])[..]);
        assert_eq!(g.out_degrees()[&GlobalVertexId(9)], 0);
        assert_eq!(g.in_edges(GlobalVertexId(1)), vec![(GlobalVertexId(0), None)]);
    }
}

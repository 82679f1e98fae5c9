//! Serial reference algorithms over the whole, unpartitioned graph.
//!
//! Nothing here touches the partitioner or the engine.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, GlobalVertexId, GraphError};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("shortest paths need edge weights")]
    MissingWeights,
    #[error("source vertex {0} is not in the graph")]
    UnknownSource(GlobalVertexId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    PageRank,
    Sssp,
    Cc,
}

/// One value per vertex, sorted by global id.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<T> {
    pub algorithm: Algorithm,
    pub parameters: serde_json::Value,
    pub values: Vec<(GlobalVertexId, T)>,
}

impl<T: Copy> OracleResult<T> {
    pub fn get(&self, v: GlobalVertexId) -> Option<T> {
        self.values
            .binary_search_by_key(&v, |(g, _)| *g)
            .ok()
            .map(|i| self.values[i].1)
    }
}

/// Dense indexing of the graph's vertex set.
struct Dense<'g> {
    graph: &'g DirectedGraph,
    index: HashMap<GlobalVertexId, usize>,
}

impl<'g> Dense<'g> {
    fn new(graph: &'g DirectedGraph) -> Self {
        let index = graph
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        Dense { graph, index }
    }

    fn of(&self, v: GlobalVertexId) -> usize {
        self.index[&v]
    }

    fn collect<T>(&self, values: Vec<T>) -> Vec<(GlobalVertexId, T)> {
        self.graph.vertices().iter().copied().zip(values).collect()
    }
}

/// Synchronous iteration of `pr(v) = base + damping * Σ pr(u) / outdeg(u)`
/// over in-edges, from `initial` everywhere. Dangling vertices contribute
/// nothing.
pub fn serial_pagerank(
    graph: &DirectedGraph,
    iterations: u64,
    damping: f64,
    base: f64,
    initial: f64,
) -> OracleResult<f64> {
    let d = Dense::new(graph);
    let n = graph.vertex_count();
    let mut out_deg = vec![0u64; n];
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in graph.edges() {
        let (s, t) = (d.of(e.source), d.of(e.target));
        out_deg[s] += 1;
        in_edges[t].push(s);
    }
    let mut pr = vec![initial; n];
    for _ in 0..iterations {
        let next: Vec<f64> = (0..n)
            .map(|v| {
                let sum: f64 = in_edges[v].iter().map(|&u| pr[u] / out_deg[u] as f64).sum();
                base + damping * sum
            })
            .collect();
        pr = next;
    }
    OracleResult {
        algorithm: Algorithm::PageRank,
        parameters: serde_json::json!({
            "iterations": iterations, "damping": damping, "base": base, "initial": initial
        }),
        values: d.collect(pr),
    }
}

/// Dijkstra from `source`; unreachable vertices get `u64::MAX`.
pub fn serial_dijkstra(
    graph: &DirectedGraph,
    source: GlobalVertexId,
) -> Result<OracleResult<u64>, OracleError> {
    if !graph.edges().is_weighted() && !graph.edges().is_empty() {
        return Err(OracleError::MissingWeights);
    }
    let d = Dense::new(graph);
    let s = *d.index.get(&source).ok_or(OracleError::UnknownSource(source))?;
    let n = graph.vertex_count();
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        adj[d.of(e.source)].push((d.of(e.target), e.weight.unwrap_or(0) as u64));
    }
    let mut dist = vec![u64::MAX; n];
    dist[s] = 0;
    let mut heap = BinaryHeap::from([Reverse((0u64, s))]);
    while let Some(Reverse((du, u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    Ok(OracleResult {
        algorithm: Algorithm::Sssp,
        parameters: serde_json::json!({ "source": source.0 }),
        values: d.collect(dist),
    })
}

/// Weakly connected components; each vertex is labeled with the smallest id
/// in its component.
pub fn serial_union_find_cc(graph: &DirectedGraph) -> OracleResult<u64> {
    let d = Dense::new(graph);
    let n = graph.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in graph.edges() {
        let a = find(&mut parent, d.of(e.source));
        let b = find(&mut parent, d.of(e.target));
        // vertices are sorted, so the smaller index is the smaller id
        if a < b {
            parent[b] = a;
        } else if b < a {
            parent[a] = b;
        }
    }
    let verts = graph.vertices();
    let labels: Vec<u64> = (0..n).map(|v| verts[find(&mut parent, v)].0).collect();
    OracleResult {
        algorithm: Algorithm::Cc,
        parameters: serde_json::json!({}),
        values: d.collect(labels),
    }
}

/// Writes `global_id,value` lines with a header.
pub fn write_csv<T: std::fmt::Display>(
    path: impl AsRef<Path>,
    values: &[(GlobalVertexId, T)],
) -> Result<(), std::io::Error> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "global_id,value")?;
    for (g, v) in values {
        writeln!(w, "{},{}", g.0, v)?;
    }
    w.flush()
}

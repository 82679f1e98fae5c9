//! Deterministic R-MAT (Graph500-style) generator.
//!
//! Randomness is counter-based: edge `e` draws from a ChaCha8 generator keyed
//! by `seed` (via `seed_from_u64`) positioned on stream `e`. Output therefore
//! depends only on `(params, e)` and generation can be split across threads
//! without changing content or order. Weights use the same scheme with the
//! caller's seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{DirectedGraph, Edge, EdgeStream, GlobalVertexId};

/// Stream reserved for the vertex-id permutation; edge streams use `0..|E|`.
const PERMUTATION_STREAM: u64 = u64::MAX;

/// Mixed into the weight seed so weights drawn with the graph's own seed are
/// independent of its edges.
const WEIGHT_DOMAIN: u64 = 0x5745_4947_4854_5321;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RmatError {
    #[error("scale must be in 1..=40, got {0}")]
    Scale(u32),
    #[error("edge factor must be >= 1")]
    EdgeFactor,
    #[error("quadrant probabilities must be non-negative and sum to 1, got {0}")]
    Probabilities(f64),
    #[error("weight range [{low}, {high}] is empty")]
    WeightRange { low: u32, high: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmatParams {
    pub scale: u32,
    pub edge_factor: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
    /// Apply a seeded permutation to vertex ids.
    pub permute: bool,
}

impl RmatParams {
    /// Graph500 quadrant probabilities (0.57, 0.19, 0.19, 0.05), out-degree 16.
    pub fn graph500(scale: u32, seed: u64) -> Self {
        RmatParams {
            scale,
            edge_factor: 16,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
            seed,
            permute: false,
        }
    }

    pub fn validate(&self) -> Result<(), RmatError> {
        if self.scale == 0 || self.scale > 40 {
            return Err(RmatError::Scale(self.scale));
        }
        if self.edge_factor == 0 {
            return Err(RmatError::EdgeFactor);
        }
        let sum = self.a + self.b + self.c + self.d;
        let negative = [self.a, self.b, self.c, self.d].iter().any(|&p| p < 0.0);
        if negative || (sum - 1.0).abs() > 1e-9 {
            return Err(RmatError::Probabilities(sum));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> u64 {
        1u64 << self.scale
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_factor as u64 * self.vertex_count()
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Recursive quadrant descent for edge number `index`.
fn rmat_edge(p: &RmatParams, base: &ChaCha8Rng, index: u64) -> (u64, u64) {
    let mut rng = base.clone();
    rng.set_stream(index);
    rng.set_word_pos(0);
    let ab = p.a + p.b;
    let abc = ab + p.c;
    let (mut u, mut v) = (0u64, 0u64);
    for level in (0..p.scale).rev() {
        let r: f64 = rng.random();
        let (su, sv) = if r < p.a {
            (0, 0)
        } else if r < ab {
            (0, 1)
        } else if r < abc {
            (1, 0)
        } else {
            (1, 1)
        };
        u |= su << level;
        v |= sv << level;
    }
    (u, v)
}

fn permutation(n: u64, seed: u64) -> Vec<u64> {
    let mut rng = stream_rng(seed, PERMUTATION_STREAM);
    let mut perm: Vec<u64> = (0..n).collect();
    for i in (1..perm.len()).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Emits exactly `edge_factor * 2^scale` directed edges with endpoints in
/// `[0, 2^scale)`. No deduplication or self-loop removal.
pub fn generate_rmat(p: &RmatParams) -> Result<EdgeStream, RmatError> {
    p.validate()?;
    let base = ChaCha8Rng::seed_from_u64(p.seed);
    let perm = p.permute.then(|| permutation(p.vertex_count(), p.seed));
    let edges: Vec<Edge> = (0..p.edge_count())
        .into_par_iter()
        .map(|i| {
            let (mut u, mut v) = rmat_edge(p, &base, i);
            if let Some(perm) = &perm {
                u = perm[u as usize];
                v = perm[v as usize];
            }
            Edge::new(u, v)
        })
        .collect();
    Ok(EdgeStream::from_parts(edges, false))
}

/// R-MAT edges over the full vertex set `[0, 2^scale)`, isolated vertices
/// included.
pub fn generate_rmat_graph(p: &RmatParams) -> Result<DirectedGraph, RmatError> {
    let edges = generate_rmat(p)?;
    Ok(DirectedGraph::with_vertices(
        (0..p.vertex_count()).map(GlobalVertexId),
        edges,
    ))
}

/// Independent uniform integer weight in `[low, high]` for every edge.
pub fn assign_weights(
    edges: &EdgeStream,
    low: u32,
    high: u32,
    seed: u64,
) -> Result<EdgeStream, RmatError> {
    if low > high {
        return Err(RmatError::WeightRange { low, high });
    }
    let base = ChaCha8Rng::seed_from_u64(seed ^ WEIGHT_DOMAIN);
    let out: Vec<Edge> = edges
        .edges()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            rng.set_word_pos(0);
            Edge {
                weight: Some(rng.random_range(low..=high)),
                ..*e
            }
        })
        .collect();
    let weighted = !out.is_empty();
    Ok(EdgeStream::from_parts(out, weighted))
}

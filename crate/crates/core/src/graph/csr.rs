use super::{GraphError, LocalVertexId};

/// Out-edge adjacency in compressed sparse row form.
///
/// Out-edges of `v` are `column_indices[row_offsets[v]..row_offsets[v + 1]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsrGraph {
    row_offsets: Vec<u64>,
    column_indices: Vec<LocalVertexId>,
}

impl CsrGraph {
    /// Builds the CSR with a counting sort; edges keep their input order
    /// within each row. Returns the permutation `order` such that CSR slot `j`
    /// holds input edge `order[j]`, so edge property columns can follow.
    pub fn build_with_order(
        edges: &[(LocalVertexId, LocalVertexId)],
        vertex_count: usize,
    ) -> Result<(Self, Vec<usize>), GraphError> {
        for &(s, t) in edges {
            if s.index() >= vertex_count || t.index() >= vertex_count {
                return Err(GraphError::IndexOutOfRange {
                    source_index: s.0,
                    target_index: t.0,
                    vertex_count,
                });
            }
        }
        let mut row_offsets = vec![0u64; vertex_count + 1];
        for &(s, _) in edges {
            row_offsets[s.index() + 1] += 1;
        }
        for v in 0..vertex_count {
            row_offsets[v + 1] += row_offsets[v];
        }
        let mut cursor: Vec<u64> = row_offsets[..vertex_count].to_vec();
        let mut column_indices = vec![LocalVertexId(0); edges.len()];
        let mut order = vec![0usize; edges.len()];
        for (i, &(s, t)) in edges.iter().enumerate() {
            let slot = cursor[s.index()] as usize;
            cursor[s.index()] += 1;
            column_indices[slot] = t;
            order[slot] = i;
        }
        Ok((
            CsrGraph {
                row_offsets,
                column_indices,
            },
            order,
        ))
    }

    pub fn build(
        edges: &[(LocalVertexId, LocalVertexId)],
        vertex_count: usize,
    ) -> Result<Self, GraphError> {
        Self::build_with_order(edges, vertex_count).map(|(g, _)| g)
    }

    /// Reassembles a CSR from raw arrays, validating every invariant.
    pub fn from_raw(
        row_offsets: Vec<u64>,
        column_indices: Vec<LocalVertexId>,
    ) -> Result<Self, GraphError> {
        let vertex_count = row_offsets.len().saturating_sub(1);
        let bad = row_offsets.is_empty()
            || row_offsets[0] != 0
            || row_offsets.windows(2).any(|w| w[0] > w[1])
            || *row_offsets.last().unwrap() != column_indices.len() as u64;
        if bad {
            return Err(GraphError::Parse {
                line: 0,
                message: "malformed CSR row offsets".into(),
            });
        }
        if let Some(c) = column_indices.iter().find(|c| c.index() >= vertex_count) {
            return Err(GraphError::VertexOutOfRange {
                vertex: c.0,
                vertex_count,
            });
        }
        Ok(CsrGraph {
            row_offsets,
            column_indices,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.row_offsets.len().saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.column_indices.len()
    }

    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[LocalVertexId] {
        &self.column_indices
    }

    /// CSR slot range of `v`'s out-edges.
    #[inline]
    pub fn edge_range(&self, v: LocalVertexId) -> std::ops::Range<usize> {
        let i = v.index();
        self.row_offsets[i] as usize..self.row_offsets[i + 1] as usize
    }

    pub fn out_edges(&self, v: LocalVertexId) -> Result<&[LocalVertexId], GraphError> {
        if v.index() >= self.vertex_count() {
            return Err(GraphError::VertexOutOfRange {
                vertex: v.0,
                vertex_count: self.vertex_count(),
            });
        }
        Ok(&self.column_indices[self.edge_range(v)])
    }

    pub fn out_degree(&self, v: LocalVertexId) -> usize {
        self.edge_range(v).len()
    }

    /// In-degree of every vertex (CSR column histogram).
    pub fn in_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.vertex_count()];
        for c in &self.column_indices {
            deg[c.index()] += 1;
        }
        deg
    }
}

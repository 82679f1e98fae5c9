use std::collections::HashMap;

use super::{GlobalVertexId, GraphError, LocalVertexId};

/// Bidirectional translation between a contiguous block of local ids
/// (`base..base + len`) and global ids.
///
/// `local_to_global` is a flat array for the hot path; `global_to_local` is a
/// hash map.
#[derive(Clone, Debug, Default)]
pub struct IdIndex {
    base: u32,
    local_to_global: Vec<GlobalVertexId>,
    global_to_local: HashMap<GlobalVertexId, LocalVertexId>,
}

// the map is derived from the array
impl PartialEq for IdIndex {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.local_to_global == other.local_to_global
    }
}

impl IdIndex {
    pub fn new(base: u32, globals: Vec<GlobalVertexId>) -> Result<Self, GraphError> {
        let mut global_to_local = HashMap::with_capacity(globals.len());
        for (i, &g) in globals.iter().enumerate() {
            if global_to_local
                .insert(g, LocalVertexId(base + i as u32))
                .is_some()
            {
                return Err(GraphError::DuplicateGlobalId(g));
            }
        }
        Ok(IdIndex {
            base,
            local_to_global: globals,
            global_to_local,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_to_global.is_empty()
    }

    pub fn contains_local(&self, l: LocalVertexId) -> bool {
        l.0 >= self.base && ((l.0 - self.base) as usize) < self.local_to_global.len()
    }

    #[inline]
    pub fn to_global(&self, l: LocalVertexId) -> Option<GlobalVertexId> {
        l.0.checked_sub(self.base)
            .and_then(|i| self.local_to_global.get(i as usize).copied())
    }

    #[inline]
    pub fn to_local(&self, g: GlobalVertexId) -> Option<LocalVertexId> {
        self.global_to_local.get(&g).copied()
    }

    /// Global ids in local order.
    pub fn globals(&self) -> &[GlobalVertexId] {
        &self.local_to_global
    }
}

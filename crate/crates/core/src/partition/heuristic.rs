use super::membership::{Membership, MembershipKind};
use crate::graph::GlobalVertexId;

/// Denominator offset of the balance term.
pub const DELTA: f64 = 1.0;

/// Default imbalance factor for the post-hoc balance check.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Streaming state of the greedy edge placer for `k` partitions.
///
/// `has_source`/`has_target` answer whether partition `i` already holds an
/// edge with a given source/target; `ne[i]` is the number of edges placed on
/// partition `i`.
#[derive(Clone, Debug)]
pub struct HeuristicState {
    k: usize,
    kind: MembershipKind,
    has_source: Membership,
    has_target: Membership,
    ne: Vec<u64>,
    pub delta: f64,
    pub epsilon: f64,
    src_flags: Vec<bool>,
    tgt_flags: Vec<bool>,
}

impl HeuristicState {
    pub fn new(k: usize) -> Self {
        Self::with_membership(k, MembershipKind::Exact)
    }

    pub fn with_membership(k: usize, kind: MembershipKind) -> Self {
        assert!(k >= 1, "partition count must be positive");
        HeuristicState {
            k,
            kind,
            has_source: Membership::new(kind, k),
            has_target: Membership::new(kind, k),
            ne: vec![0; k],
            delta: DELTA,
            epsilon: DEFAULT_EPSILON,
            src_flags: vec![false; k],
            tgt_flags: vec![false; k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn membership(&self) -> MembershipKind {
        self.kind
    }

    pub fn ne(&self) -> &[u64] {
        &self.ne
    }

    pub fn max_load(&self) -> u64 {
        self.ne.iter().copied().max().unwrap_or(0)
    }

    pub fn min_load(&self) -> u64 {
        self.ne.iter().copied().min().unwrap_or(0)
    }

    pub fn has_source(&self, u: GlobalVertexId, part: usize) -> bool {
        self.has_source.contains(u, part)
    }

    pub fn has_target(&self, v: GlobalVertexId, part: usize) -> bool {
        self.has_target.contains(v, part)
    }

    /// Records edge `(u, v)` on `part`.
    pub fn record(&mut self, u: GlobalVertexId, v: GlobalVertexId, part: usize) {
        self.has_source.insert(u, part);
        self.has_target.insert(v, part);
        self.ne[part] += 1;
    }

    /// Heuristic score of every partition for `(u, v)` under the current
    /// (pre-placement) counts.
    pub fn scores(&self, u: GlobalVertexId, v: GlobalVertexId) -> Vec<f64> {
        let mut src = vec![false; self.k];
        let mut tgt = vec![false; self.k];
        self.has_source.or_flags(u, &mut src);
        self.has_target.or_flags(v, &mut tgt);
        let ne = &self.ne;
        let (max, min) = (self.max_load(), self.min_load());
        (0..self.k)
            .map(|i| score(src[i], tgt[i], ne[i], max, min, self.delta))
            .collect()
    }

    /// Folds another state's tables and counts into this one.
    pub(crate) fn merge_from(&mut self, other: &HeuristicState) {
        self.has_source.merge_from(&other.has_source);
        self.has_target.merge_from(&other.has_target);
        for (a, b) in self.ne.iter_mut().zip(&other.ne) {
            *a += *b;
        }
    }

    pub(crate) fn clear(&mut self) {
        self.has_source.clear();
        self.has_target.clear();
        self.ne.iter_mut().for_each(|n| *n = 0);
    }
}

#[inline]
fn score(src: bool, tgt: bool, ne: u64, max: u64, min: u64, delta: f64) -> f64 {
    let f = if src { 1.0 } else { 0.0 };
    let g = if tgt { 1.0 } else { 0.0 };
    f + g + (max - ne) as f64 / (delta + (max - min) as f64)
}

/// Argmax with ties to the lowest index.
fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Places `(u, v)` on the partition maximizing
/// `f(u,i) + g(v,i) + (Max - Ne(i)) / (delta + Max - Min)`, scoring with
/// pre-placement counts, then records the edge there.
pub fn greedy_place(u: GlobalVertexId, v: GlobalVertexId, s: &mut HeuristicState) -> usize {
    let mut src = std::mem::take(&mut s.src_flags);
    let mut tgt = std::mem::take(&mut s.tgt_flags);
    src.iter_mut().for_each(|f| *f = false);
    tgt.iter_mut().for_each(|f| *f = false);
    s.has_source.or_flags(u, &mut src);
    s.has_target.or_flags(v, &mut tgt);
    let (max, min) = (s.max_load(), s.min_load());
    let best = argmax((0..s.k).map(|i| score(src[i], tgt[i], s.ne[i], max, min, s.delta)));
    s.src_flags = src;
    s.tgt_flags = tgt;
    s.record(u, v, best);
    best
}

/// Like [`greedy_place`] but scores against `snapshot ∪ local` and records
/// only into `local` (the loader's unsynchronized delta).
pub(crate) fn greedy_place_layered(
    u: GlobalVertexId,
    v: GlobalVertexId,
    snapshot: &HeuristicState,
    local: &mut HeuristicState,
) -> usize {
    let mut src = std::mem::take(&mut local.src_flags);
    let mut tgt = std::mem::take(&mut local.tgt_flags);
    src.iter_mut().for_each(|f| *f = false);
    tgt.iter_mut().for_each(|f| *f = false);
    snapshot.has_source.or_flags(u, &mut src);
    local.has_source.or_flags(u, &mut src);
    snapshot.has_target.or_flags(v, &mut tgt);
    local.has_target.or_flags(v, &mut tgt);
    let load = |i: usize| snapshot.ne[i] + local.ne[i];
    let max = (0..local.k).map(load).max().unwrap_or(0);
    let min = (0..local.k).map(load).min().unwrap_or(0);
    let delta = local.delta;
    let best = argmax((0..local.k).map(|i| score(src[i], tgt[i], load(i), max, min, delta)));
    local.src_flags = src;
    local.tgt_flags = tgt;
    local.record(u, v, best);
    best
}

//! Per-partition vertex membership tables backing the `f`/`g` indicator
//! terms of the greedy heuristic.

use std::collections::HashMap;

use smallvec::{smallvec, SmallVec};

use super::mix64;
use crate::graph::GlobalVertexId;

/// Which structure answers "partition `i` has an edge with endpoint `v`".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MembershipKind {
    #[default]
    Exact,
    /// Bloom filter per partition with `bits` bits and `hashes` probes.
    ///
    /// After inserting `n` vertices into one partition the false-positive
    /// rate is approximately `(1 - exp(-hashes * n / bits)) ^ hashes`.
    Approximate { bits: usize, hashes: u32 },
}

impl MembershipKind {
    /// Expected false-positive probability after `inserted` insertions into
    /// one partition. Zero for exact tables.
    pub fn false_positive_rate(&self, inserted: usize) -> f64 {
        match *self {
            MembershipKind::Exact => 0.0,
            MembershipKind::Approximate { bits, hashes } => {
                let h = hashes as f64;
                (1.0 - (-h * inserted as f64 / bits as f64).exp()).powf(h)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Membership {
    Exact(ExactSets),
    Approximate(BloomSets),
}

impl Membership {
    pub(crate) fn new(kind: MembershipKind, k: usize) -> Self {
        match kind {
            MembershipKind::Exact => Membership::Exact(ExactSets::new(k)),
            MembershipKind::Approximate { bits, hashes } => {
                Membership::Approximate(BloomSets::new(k, bits, hashes))
            }
        }
    }

    pub(crate) fn insert(&mut self, v: GlobalVertexId, part: usize) {
        match self {
            Membership::Exact(s) => s.insert(v, part),
            Membership::Approximate(b) => b.insert(v, part),
        }
    }

    pub(crate) fn contains(&self, v: GlobalVertexId, part: usize) -> bool {
        match self {
            Membership::Exact(s) => s.contains(v, part),
            Membership::Approximate(b) => b.contains(v, part),
        }
    }

    /// Sets `flags[i] |= contains(v, i)` for every partition.
    pub(crate) fn or_flags(&self, v: GlobalVertexId, flags: &mut [bool]) {
        match self {
            Membership::Exact(s) => s.or_flags(v, flags),
            Membership::Approximate(b) => {
                for (i, f) in flags.iter_mut().enumerate() {
                    *f |= b.contains(v, i);
                }
            }
        }
    }

    pub(crate) fn merge_from(&mut self, other: &Membership) {
        match (self, other) {
            (Membership::Exact(a), Membership::Exact(b)) => a.merge_from(b),
            (Membership::Approximate(a), Membership::Approximate(b)) => a.merge_from(b),
            _ => panic!("cannot merge membership tables of different kinds"),
        }
    }

    pub(crate) fn clear(&mut self) {
        match self {
            Membership::Exact(s) => s.rows.clear(),
            Membership::Approximate(b) => b.words.iter_mut().for_each(|w| *w = 0),
        }
    }
}

/// Exact sets: one partition bitmask per vertex.
#[derive(Clone, Debug)]
pub(crate) struct ExactSets {
    words: usize,
    rows: HashMap<GlobalVertexId, SmallVec<[u64; 1]>>,
}

impl ExactSets {
    fn new(k: usize) -> Self {
        ExactSets {
            words: k.div_ceil(64).max(1),
            rows: HashMap::new(),
        }
    }

    fn insert(&mut self, v: GlobalVertexId, part: usize) {
        let words = self.words;
        let row = self.rows.entry(v).or_insert_with(|| smallvec![0; words]);
        row[part / 64] |= 1 << (part % 64);
    }

    fn contains(&self, v: GlobalVertexId, part: usize) -> bool {
        self.rows
            .get(&v)
            .is_some_and(|row| row[part / 64] >> (part % 64) & 1 == 1)
    }

    fn or_flags(&self, v: GlobalVertexId, flags: &mut [bool]) {
        if let Some(row) = self.rows.get(&v) {
            for (i, f) in flags.iter_mut().enumerate() {
                *f |= row[i / 64] >> (i % 64) & 1 == 1;
            }
        }
    }

    fn merge_from(&mut self, other: &ExactSets) {
        for (v, row) in &other.rows {
            let words = self.words;
            let mine = self.rows.entry(*v).or_insert_with(|| smallvec![0; words]);
            for (a, b) in mine.iter_mut().zip(row) {
                *a |= *b;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BloomSets {
    bits: usize,
    hashes: u32,
    words_per_part: usize,
    words: Vec<u64>,
}

impl BloomSets {
    fn new(k: usize, bits: usize, hashes: u32) -> Self {
        let bits = bits.max(64);
        let words_per_part = bits.div_ceil(64);
        BloomSets {
            bits: words_per_part * 64,
            hashes: hashes.max(1),
            words_per_part,
            words: vec![0; words_per_part * k],
        }
    }

    // double hashing: probe_j = h1 + j * h2
    fn probes(&self, v: GlobalVertexId) -> impl Iterator<Item = usize> + '_ {
        let h1 = mix64(v.0);
        let h2 = mix64(v.0 ^ 0x9e37_79b9_7f4a_7c15) | 1;
        (0..self.hashes as u64)
            .map(move |j| (h1.wrapping_add(j.wrapping_mul(h2)) % self.bits as u64) as usize)
    }

    fn insert(&mut self, v: GlobalVertexId, part: usize) {
        let base = part * self.words_per_part;
        let probes: SmallVec<[usize; 8]> = self.probes(v).collect();
        for bit in probes {
            self.words[base + bit / 64] |= 1 << (bit % 64);
        }
    }

    fn contains(&self, v: GlobalVertexId, part: usize) -> bool {
        let base = part * self.words_per_part;
        self.probes(v)
            .all(|bit| self.words[base + bit / 64] >> (bit % 64) & 1 == 1)
    }

    fn merge_from(&mut self, other: &BloomSets) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }
}

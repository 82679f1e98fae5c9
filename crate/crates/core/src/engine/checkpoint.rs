//! Superstep-boundary snapshots.
//!
//! Layout (little-endian): magic, u32 version, u64 superstep, u32 k, u16
//! message format, u16 scatter format, u32 vertex width, u32 scatter width,
//! then per partition: u32 index, u64 master count, u64 topology
//! fingerprint, and four length-prefixed sections (vertex_data bytes,
//! master scatter_data bytes, active_scatter words, active_apply words).

use std::path::Path;

use super::sync::Bitmap;
use super::wire::WireValue;
use super::{EngineError, RuntimeState, VertexProgram};
use crate::partition::AgentGraphPartition;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AGCKPT\0\0";
const VERSION: u32 = 1;

/// FNV-1a over the partition's vertex sets and edge count.
fn fingerprint(p: &AgentGraphPartition) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for g in p.masters() {
        eat(g.0);
    }
    eat(p.scatter_count() as u64);
    eat(p.combiner_count() as u64);
    eat(p.edge_count() as u64);
    h
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_values<T: WireValue>(out: &mut Vec<u8>, values: &[T]) {
    put_u64(out, (values.len() * T::WIDTH) as u64);
    let at = out.len();
    out.resize(at + values.len() * T::WIDTH, 0);
    for (i, v) in values.iter().enumerate() {
        v.write_to(&mut out[at + i * T::WIDTH..]);
    }
}

fn put_words(out: &mut Vec<u8>, words: &[u64]) {
    put_u64(out, words.len() as u64);
    for &w in words {
        put_u64(out, w);
    }
}

pub(super) fn write<P: VertexProgram>(
    path: &Path,
    parts: &[AgentGraphPartition],
    states: &[RuntimeState<P>],
    superstep: u64,
    _program: &P,
) -> Result<(), EngineError> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, VERSION);
    put_u64(&mut out, superstep);
    put_u32(&mut out, parts.len() as u32);
    out.extend_from_slice(&P::MESSAGE_FORMAT.to_le_bytes());
    out.extend_from_slice(&P::SCATTER_FORMAT.to_le_bytes());
    put_u32(&mut out, P::Vertex::WIDTH as u32);
    put_u32(&mut out, P::Scatter::WIDTH as u32);
    for (p, s) in parts.iter().zip(states) {
        let n = p.master_count();
        put_u32(&mut out, p.index());
        put_u64(&mut out, n as u64);
        put_u64(&mut out, fingerprint(p));
        put_values(&mut out, s.vertex_data.as_slice());
        put_values(&mut out, &s.scatter_data.as_slice()[..n]);
        put_words(&mut out, &s.active_scatter.words());
        put_words(&mut out, &s.active_apply.words());
    }
    // write then rename so a crash never leaves a torn snapshot
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(super) struct PartSnapshot<V, S> {
    pub vertex: Vec<V>,
    pub scatter: Vec<S>,
    pub active_scatter: Bitmap,
}

pub(super) struct Snapshot<V, S> {
    pub superstep: u64,
    pub parts: Vec<PartSnapshot<V, S>>,
    pub apply: Vec<Bitmap>,
}

struct Cursor<'b> {
    bytes: &'b [u8],
    at: usize,
}

impl<'b> Cursor<'b> {
    fn take(&mut self, n: usize) -> Result<&'b [u8], EngineError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| EngineError::Checkpoint("truncated snapshot".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, EngineError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, EngineError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, EngineError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn values<T: WireValue>(&mut self, count: usize) -> Result<Vec<T>, EngineError> {
        let len = self.u64()? as usize;
        if len != count * T::WIDTH {
            return Err(EngineError::Compatibility(format!(
                "section of {len} bytes for {count} values"
            )));
        }
        let raw = self.take(len)?;
        Ok((0..count)
            .map(|i| T::read_from(&raw[i * T::WIDTH..]))
            .collect())
    }

    fn bitmap(&mut self, len: usize) -> Result<Bitmap, EngineError> {
        let words = self.u64()? as usize;
        if words != len.div_ceil(64) {
            return Err(EngineError::Compatibility("bitmap length mismatch".into()));
        }
        let raw = self.take(words * 8)?;
        let w: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Bitmap::from_words(len, &w).ok_or_else(|| EngineError::Checkpoint("bitmap has stray bits".into()))
    }
}

pub(super) fn read<P: VertexProgram>(
    path: &Path,
    parts: &[AgentGraphPartition],
    _program: &P,
) -> Result<Snapshot<P::Vertex, P::Scatter>, EngineError> {
    let bytes = std::fs::read(path)?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err(EngineError::Checkpoint("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(EngineError::Checkpoint(format!("unsupported version {version}")));
    }
    let superstep = c.u64()?;
    let k = c.u32()?;
    if k as usize != parts.len() {
        return Err(EngineError::Compatibility(format!(
            "snapshot has {k} partitions, engine has {}",
            parts.len()
        )));
    }
    let formats = (c.u16()?, c.u16()?, c.u32()?, c.u32()?);
    let expected = (
        P::MESSAGE_FORMAT,
        P::SCATTER_FORMAT,
        P::Vertex::WIDTH as u32,
        P::Scatter::WIDTH as u32,
    );
    if formats != expected {
        return Err(EngineError::Compatibility("snapshot was taken by a different program".into()));
    }
    let mut snaps = Vec::with_capacity(parts.len());
    let mut apply = Vec::with_capacity(parts.len());
    for p in parts {
        let (index, n, fp) = (c.u32()?, c.u64()? as usize, c.u64()?);
        if index != p.index() || n != p.master_count() || fp != fingerprint(p) {
            return Err(EngineError::Compatibility(format!(
                "partition {} topology differs from snapshot",
                p.index()
            )));
        }
        let vertex = c.values::<P::Vertex>(n)?;
        let scatter = c.values::<P::Scatter>(n)?;
        let active_scatter = c.bitmap(n)?;
        apply.push(c.bitmap(n)?);
        snaps.push(PartSnapshot {
            vertex,
            scatter,
            active_scatter,
        });
    }
    if c.at != bytes.len() {
        return Err(EngineError::Checkpoint("trailing bytes".into()));
    }
    Ok(Snapshot {
        superstep,
        parts: snaps,
        apply,
    })
}

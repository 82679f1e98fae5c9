//! On-disk partition files, manifest and metrics report.
//!
//! A partition file is `AGPART\0\0`, then u32 version, index, k and flags
//! (bit 0: weighted), then thirteen sections in fixed order. Every section is
//! a u64 element count followed by the little-endian elements.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AgentGraphPartition, PartitionError, PartitionMetrics, PartitionMode, Ragged};
use crate::graph::{CsrGraph, GlobalVertexId, IdIndex, LocalVertexId, PropertyColumn};

const MAGIC: &[u8; 8] = b"AGPART\0\0";
const VERSION: u32 = 1;
const FLAG_WEIGHTED: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";

/// Describes a directory of partition files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub k: u32,
    pub mode: PartitionMode,
    pub vertex_count: u64,
    pub edge_count: u64,
    pub weighted: bool,
    /// Edges were symmetrized before partitioning.
    pub symmetrized: bool,
    pub files: Vec<String>,
}

pub fn partition_file_name(index: u32) -> String {
    format!("part-{index:05}.bin")
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }

    fn section_u64(&mut self, items: impl ExactSizeIterator<Item = u64>) -> std::io::Result<()> {
        self.0.write_all(&(items.len() as u64).to_le_bytes())?;
        for v in items {
            self.0.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn section_u32(&mut self, items: impl ExactSizeIterator<Item = u32>) -> std::io::Result<()> {
        self.0.write_all(&(items.len() as u64).to_le_bytes())?;
        for v in items {
            self.0.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn write_partition(path: impl AsRef<Path>, p: &AgentGraphPartition) -> Result<(), PartitionError> {
    let mut w = Writer(BufWriter::new(File::create(path)?));
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;
    w.u32(p.index)?;
    w.u32(p.k)?;
    w.u32(if p.is_weighted() { FLAG_WEIGHTED } else { 0 })?;
    let gids = |idx: &IdIndex| idx.globals().iter().map(|g| g.0).collect::<Vec<_>>();
    w.section_u64(gids(&p.masters).into_iter())?;
    w.section_u64(gids(&p.scatters).into_iter())?;
    w.section_u64(gids(&p.combiners).into_iter())?;
    w.section_u32(p.scatter_owner.iter().copied())?;
    w.section_u32(p.combiner_owner.iter().copied())?;
    w.section_u64(p.csr.row_offsets().iter().copied())?;
    w.section_u32(p.csr.column_indices().iter().map(|l| l.0))?;
    w.section_u64(p.scatter_placement.offsets().iter().copied())?;
    w.section_u32(p.scatter_placement.values().iter().copied())?;
    w.section_u64(p.combiner_presence.offsets().iter().copied())?;
    w.section_u32(p.combiner_presence.values().iter().copied())?;
    w.section_u64(p.out_degree.iter().copied())?;
    match &p.edge_weights {
        Some(col) => w.section_u32(col.as_slice().iter().copied())?,
        None => w.section_u32(std::iter::empty())?,
    }
    w.0.flush()?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
    remaining: u64,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], PartitionError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => PartitionError::Format("truncated file".into()),
            _ => PartitionError::Io(e),
        })?;
        self.remaining = self.remaining.saturating_sub(N as u64);
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32, PartitionError> {
        Ok(u32::from_le_bytes(self.bytes::<4>()?))
    }

    fn u64(&mut self) -> Result<u64, PartitionError> {
        Ok(u64::from_le_bytes(self.bytes::<8>()?))
    }

    fn len(&mut self, width: u64) -> Result<usize, PartitionError> {
        let n = self.u64()?;
        if n.checked_mul(width).is_none_or(|b| b > self.remaining) {
            return Err(PartitionError::Format(format!("section length {n} exceeds file size")));
        }
        Ok(n as usize)
    }

    fn section_u64(&mut self) -> Result<Vec<u64>, PartitionError> {
        let n = self.len(8)?;
        (0..n).map(|_| self.u64()).collect()
    }

    fn section_u32(&mut self) -> Result<Vec<u32>, PartitionError> {
        let n = self.len(4)?;
        (0..n).map(|_| self.u32()).collect()
    }
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<AgentGraphPartition, PartitionError> {
    let file = File::open(path)?;
    let remaining = file.metadata()?.len();
    let mut r = Reader {
        inner: BufReader::new(file),
        remaining,
    };
    if &r.bytes::<8>()? != MAGIC {
        return Err(PartitionError::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(PartitionError::Format(format!("unsupported version {version}")));
    }
    let index = r.u32()?;
    let k = r.u32()?;
    let flags = r.u32()?;
    let to_gids = |v: Vec<u64>| v.into_iter().map(GlobalVertexId).collect::<Vec<_>>();
    let masters = to_gids(r.section_u64()?);
    let scatters = to_gids(r.section_u64()?);
    let combiners = to_gids(r.section_u64()?);
    let scatter_owner = r.section_u32()?;
    let combiner_owner = r.section_u32()?;
    let row_offsets = r.section_u64()?;
    let columns: Vec<LocalVertexId> = r.section_u32()?.into_iter().map(LocalVertexId).collect();
    let sp_offsets = r.section_u64()?;
    let sp_values = r.section_u32()?;
    let cp_offsets = r.section_u64()?;
    let cp_values = r.section_u32()?;
    let out_degree = r.section_u64()?;
    let weights = r.section_u32()?;
    if r.remaining != 0 {
        return Err(PartitionError::Format("trailing bytes".into()));
    }

    let n = masters.len() as u32;
    let s = scatters.len() as u32;
    let ragged = |o, v| Ragged::from_raw(o, v).ok_or_else(|| PartitionError::Format("malformed placement table".into()));
    let csr = CsrGraph::from_raw(row_offsets, columns)?;
    let edge_weights = if flags & FLAG_WEIGHTED != 0 {
        Some(PropertyColumn::load("weight", weights, csr.edge_count())?)
    } else {
        None
    };
    let part = AgentGraphPartition {
        index,
        k,
        csr,
        masters: IdIndex::new(0, masters)?,
        scatters: IdIndex::new(n, scatters)?,
        combiners: IdIndex::new(n + s, combiners)?,
        scatter_owner,
        combiner_owner,
        scatter_placement: ragged(sp_offsets, sp_values)?,
        combiner_presence: ragged(cp_offsets, cp_values)?,
        out_degree,
        edge_weights,
    };
    part.validate()?;
    Ok(part)
}

/// Writes every partition, the manifest and (if given) the metrics report
/// into `dir`, creating it if needed.
pub fn save_partitions(
    dir: impl AsRef<Path>,
    parts: &[AgentGraphPartition],
    mut manifest: Manifest,
    metrics: Option<&PartitionMetrics>,
) -> Result<Manifest, PartitionError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    manifest.files.clear();
    for p in parts {
        let name = partition_file_name(p.index);
        write_partition(dir.join(&name), p)?;
        manifest.files.push(name);
    }
    manifest.k = parts.len() as u32;
    write_json(dir.join(MANIFEST_FILE), &manifest)?;
    if let Some(m) = metrics {
        write_json(dir.join(METRICS_FILE), m)?;
    }
    Ok(manifest)
}

pub fn load_partitions(
    dir: impl AsRef<Path>,
) -> Result<(Manifest, Vec<AgentGraphPartition>), PartitionError> {
    let dir = dir.as_ref();
    let manifest: Manifest = read_json(dir.join(MANIFEST_FILE))?;
    if manifest.files.len() != manifest.k as usize {
        return Err(PartitionError::Format(format!(
            "manifest lists {} files for k = {}",
            manifest.files.len(),
            manifest.k
        )));
    }
    let parts = manifest
        .files
        .iter()
        .map(|f| read_partition(dir.join(f)))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, p) in parts.iter().enumerate() {
        if p.index != i as u32 || p.k != manifest.k {
            return Err(PartitionError::Format(format!(
                "file {} holds partition {} of {}",
                manifest.files[i], p.index, p.k
            )));
        }
        if p.is_weighted() != manifest.weighted {
            return Err(PartitionError::Format("weight flag disagrees with manifest".into()));
        }
    }
    Ok((manifest, parts))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), PartitionError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| PartitionError::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T, PartitionError> {
    let path: PathBuf = path.as_ref().into();
    let file = File::open(&path)?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| PartitionError::Format(format!("{}: {e}", path.display())))
}

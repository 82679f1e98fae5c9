//! Edge-list file formats.
//!
//! Text: one edge per line, `u v` or `u v w`, whitespace separated, lines
//! starting with `#` ignored. Binary: fixed 20-byte little-endian records
//! `(u64 source, u64 target, u32 weight)`; unweighted lists store weight 0.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Edge, EdgeStream, GlobalVertexId, GraphError};

pub const BINARY_RECORD_WIDTH: usize = 20;

pub fn read_edge_list(path: impl AsRef<Path>, weighted: bool) -> Result<EdgeStream, GraphError> {
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), weighted)
}

pub fn parse_edge_list(reader: impl BufRead, weighted: bool) -> Result<EdgeStream, GraphError> {
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut field = |what: &str| -> Result<u64, GraphError> {
            let tok = tokens.next().ok_or_else(|| GraphError::Parse {
                line: lineno,
                message: format!("missing {what}"),
            })?;
            tok.parse::<u64>().map_err(|_| GraphError::Parse {
                line: lineno,
                message: format!("invalid {what} `{tok}`"),
            })
        };
        let source = field("source")?;
        let target = field("target")?;
        let weight = if weighted {
            let w = field("weight")?;
            Some(u32::try_from(w).map_err(|_| GraphError::Parse {
                line: lineno,
                message: format!("weight {w} exceeds 32 bits"),
            })?)
        } else {
            None
        };
        edges.push(Edge {
            source: GlobalVertexId(source),
            target: GlobalVertexId(target),
            weight,
        });
    }
    Ok(EdgeStream::from_parts(edges, weighted))
}

pub fn write_edge_list(path: impl AsRef<Path>, edges: &EdgeStream) -> Result<(), GraphError> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in edges {
        match e.weight {
            Some(wt) => writeln!(w, "{} {} {}", e.source, e.target, wt)?,
            None => writeln!(w, "{} {}", e.source, e.target)?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary_edge_list(
    path: impl AsRef<Path>,
    edges: &EdgeStream,
) -> Result<(), GraphError> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in edges {
        w.write_all(&e.source.0.to_le_bytes())?;
        w.write_all(&e.target.0.to_le_bytes())?;
        w.write_all(&e.weight.unwrap_or(0).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary_edge_list(
    path: impl AsRef<Path>,
    weighted: bool,
) -> Result<EdgeStream, GraphError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % BINARY_RECORD_WIDTH != 0 {
        return Err(GraphError::TruncatedBinary(bytes.len() as u64));
    }
    let edges = bytes
        .chunks_exact(BINARY_RECORD_WIDTH)
        .map(|r| {
            let source = u64::from_le_bytes(r[0..8].try_into().unwrap());
            let target = u64::from_le_bytes(r[8..16].try_into().unwrap());
            let weight = u32::from_le_bytes(r[16..20].try_into().unwrap());
            Edge {
                source: GlobalVertexId(source),
                target: GlobalVertexId(target),
                weight: weighted.then_some(weight),
            }
        })
        .collect();
    Ok(EdgeStream::from_parts(edges, weighted))
}

/// Dispatches on extension: `.bin` is binary, anything else text.
pub fn read_any(path: impl AsRef<Path>, weighted: bool) -> Result<EdgeStream, GraphError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        read_binary_edge_list(path, weighted)
    } else {
        read_edge_list(path, weighted)
    }
}

pub fn write_any(path: impl AsRef<Path>, edges: &EdgeStream) -> Result<(), GraphError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        write_binary_edge_list(path, edges)
    } else {
        write_edge_list(path, edges)
    }
}

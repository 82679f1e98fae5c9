//! Active-message buffer layout.
//!
//! ```text
//! byte 0      op
//! byte 1      flag
//! bytes 2..4  format_id  (u16 LE)
//! bytes 4..8  count      (u32 LE)
//! then count records: dest (u64 LE) ++ data (fixed width for the format)
//! ```

use super::EngineError;
use crate::graph::GlobalVertexId;

pub const HEADER_LEN: usize = 8;
pub const DEST_LEN: usize = 8;
pub const DEFAULT_BUFFER_CAPACITY: usize = 64 * 1024;

/// Message folded into a master or combiner.
pub const OP_COMBINE: u8 = 1;
/// Master scatter payload relayed by a scatter agent.
pub const OP_SCATTER: u8 = 2;

/// Fixed-width little-endian encoding of a message payload.
pub trait WireValue: Copy {
    const WIDTH: usize;
    fn write_to(&self, out: &mut [u8]);
    fn read_from(bytes: &[u8]) -> Self;
}

impl WireValue for () {
    const WIDTH: usize = 0;
    fn write_to(&self, _: &mut [u8]) {}
    fn read_from(_: &[u8]) -> Self {}
}

macro_rules! wire_le {
    ($($t:ty),*) => {$(
        impl WireValue for $t {
            const WIDTH: usize = std::mem::size_of::<$t>();
            fn write_to(&self, out: &mut [u8]) {
                out[..Self::WIDTH].copy_from_slice(&self.to_le_bytes());
            }
            fn read_from(bytes: &[u8]) -> Self {
                <$t>::from_le_bytes(bytes[..Self::WIDTH].try_into().unwrap())
            }
        }
    )*};
}

wire_le!(u8, u16, u32, u64, i64, f32, f64);

impl WireValue for GlobalVertexId {
    const WIDTH: usize = 8;
    fn write_to(&self, out: &mut [u8]) {
        self.0.write_to(out)
    }
    fn read_from(bytes: &[u8]) -> Self {
        GlobalVertexId(u64::read_from(bytes))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferHeader {
    pub op: u8,
    pub flag: u8,
    pub format_id: u16,
    pub count: u32,
}

impl BufferHeader {
    pub fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0] = self.op;
        b[1] = self.flag;
        b[2..4].copy_from_slice(&self.format_id.to_le_bytes());
        b[4..8].copy_from_slice(&self.count.to_le_bytes());
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, EngineError> {
        if bytes.len() < HEADER_LEN {
            return Err(EngineError::Wire(format!("buffer of {} bytes has no header", bytes.len())));
        }
        Ok(BufferHeader {
            op: bytes[0],
            flag: bytes[1],
            format_id: u16::from_le_bytes([bytes[2], bytes[3]]),
            count: u32::from_le_bytes(bytes[4..8].try_into().unwrap()),
        })
    }
}

/// Records that fit in a buffer of `capacity` bytes.
pub fn records_per_buffer<T: WireValue>(capacity: usize) -> usize {
    capacity.saturating_sub(HEADER_LEN) / (DEST_LEN + T::WIDTH)
}

/// Fixed-capacity buffer of messages sharing one format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageBuffer {
    bytes: Vec<u8>,
    capacity: usize,
}

impl MessageBuffer {
    pub fn new(op: u8, flag: u8, format_id: u16, capacity: usize) -> Self {
        let mut bytes = Vec::with_capacity(capacity.min(1 << 20));
        bytes.extend_from_slice(
            &BufferHeader {
                op,
                flag,
                format_id,
                count: 0,
            }
            .to_bytes(),
        );
        MessageBuffer { bytes, capacity }
    }

    pub fn header(&self) -> BufferHeader {
        BufferHeader::parse(&self.bytes).unwrap()
    }

    pub fn count(&self) -> u32 {
        u32::from_le_bytes(self.bytes[4..8].try_into().unwrap())
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Appends one record; returns false without writing when full.
    pub fn push<T: WireValue>(&mut self, dest: GlobalVertexId, data: &T) -> bool {
        let rec = DEST_LEN + T::WIDTH;
        if self.bytes.len() + rec > self.capacity || self.count() == u32::MAX {
            return false;
        }
        let at = self.bytes.len();
        self.bytes.resize(at + rec, 0);
        self.bytes[at..at + DEST_LEN].copy_from_slice(&dest.0.to_le_bytes());
        data.write_to(&mut self.bytes[at + DEST_LEN..]);
        let count = self.count() + 1;
        self.bytes[4..8].copy_from_slice(&count.to_le_bytes());
        true
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Packs `messages` into one buffer. Fails if they exceed `capacity`; the
/// caller is expected to split.
pub fn pack_buffer<T: WireValue>(
    messages: &[(GlobalVertexId, T)],
    op: u8,
    flag: u8,
    format_id: u16,
    capacity: usize,
) -> Result<Vec<u8>, EngineError> {
    if messages.len() > records_per_buffer::<T>(capacity) {
        return Err(EngineError::Wire(format!(
            "{} messages exceed buffer capacity of {capacity} bytes",
            messages.len()
        )));
    }
    let mut buf = MessageBuffer::new(op, flag, format_id, capacity);
    for (dest, data) in messages {
        buf.push(*dest, data);
    }
    Ok(buf.into_bytes())
}

/// Packs any number of messages into as many full buffers as needed.
pub fn pack_buffers<T: WireValue>(
    messages: &[(GlobalVertexId, T)],
    op: u8,
    format_id: u16,
    capacity: usize,
) -> Result<Vec<Vec<u8>>, EngineError> {
    let per = records_per_buffer::<T>(capacity);
    if per == 0 {
        return Err(EngineError::Wire(format!("capacity {capacity} holds no record")));
    }
    messages
        .chunks(per)
        .map(|chunk| pack_buffer(chunk, op, 0, format_id, capacity))
        .collect()
}

/// Parses a buffer, checking its length against the header count.
pub fn unpack_buffer<T: WireValue>(
    bytes: &[u8],
) -> Result<(BufferHeader, Vec<(GlobalVertexId, T)>), EngineError> {
    let header = BufferHeader::parse(bytes)?;
    let rec = DEST_LEN + T::WIDTH;
    let expected = HEADER_LEN + header.count as usize * rec;
    if bytes.len() != expected {
        return Err(EngineError::Wire(format!(
            "buffer has {} bytes, header count {} needs {expected}",
            bytes.len(),
            header.count
        )));
    }
    let records = bytes[HEADER_LEN..]
        .chunks_exact(rec)
        .map(|r| {
            (
                GlobalVertexId(u64::from_le_bytes(r[..DEST_LEN].try_into().unwrap())),
                T::read_from(&r[DEST_LEN..]),
            )
        })
        .collect();
    Ok((header, records))
}

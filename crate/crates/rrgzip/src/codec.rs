//! Delta + variable-byte codec for adjacency lists.
//!
//! Targets are sorted, gap-encoded against the previous id (the first gap is
//! measured from zero, so it equals the first absolute id), and each gap is
//! written as big-endian base-128 digits with 128 added to the final digit.
//! The terminator therefore sits on the *last* octet of a value: scanning a
//! stream and splitting after each octet ≥ 128 recovers value boundaries
//! without any length prefix. One switch-id octet per edge follows the gap
//! stream, in the same sorted order.
//!
//! Example: the list `44, 62, 387, 401, 414, 430, 910` gap-encodes to
//! `44, 18, 325, 14, 13, 16, 480` and packs into nine octets
//! `AC 92 02C5 8E 8D 90 03E0`, down from 28 bytes of raw `u32` ids.

use crate::{Error, Result};

/// Largest encodable value: nine base-128 digits.
pub const MAX_VALUE: u64 = (1 << 63) - 1;

/// Most octets a single value can occupy.
pub const MAX_ENCODED_LEN: usize = 9;

/// Number of octets `encode_value` emits for `v`.
pub fn encoded_len(v: u64) -> usize {
    let mut len = 1;
    let mut rest = v / 128;
    while rest > 0 {
        len += 1;
        rest /= 128;
    }
    len
}

/// Append the v-byte encoding of `v` to `out`.
///
/// Digits are emitted most-significant first and the final digit carries the
/// +128 terminator, so every value except 0 starts with a non-zero digit and
/// the encoding is minimal-length.
pub fn encode_value(v: u64, out: &mut Vec<u8>) -> Result<()> {
    if v > MAX_VALUE {
        return Err(Error::ValueTooLarge { value: v });
    }
    let mut digits = [0u8; MAX_ENCODED_LEN];
    let mut len = 0;
    let mut rest = v;
    loop {
        digits[len] = (rest % 128) as u8;
        len += 1;
        rest /= 128;
        if rest == 0 {
            break;
        }
    }
    for i in (1..len).rev() {
        out.push(digits[i]);
    }
    out.push(digits[0] + 128);
    Ok(())
}

/// Decode one value starting at `cursor`; returns the value and the cursor
/// just past its terminating octet.
pub fn decode_value(bytes: &[u8], mut cursor: usize) -> Result<(u64, usize)> {
    let start = cursor;
    let mut acc: u64 = 0;
    loop {
        let Some(&octet) = bytes.get(cursor) else {
            return Err(Error::TruncatedStream { offset: cursor });
        };
        cursor += 1;
        let digit = (octet & 0x7f) as u64;
        acc = acc
            .checked_mul(128)
            .and_then(|a| a.checked_add(digit))
            .filter(|&a| a <= MAX_VALUE)
            .ok_or(Error::CorruptStream { offset: start })?;
        if octet >= 128 {
            return Ok((acc, cursor));
        }
    }
}

/// One node's adjacency list in encoded form: an edge count, the gap bytes
/// for the sorted target ids, and one switch octet per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyEntryBytes {
    pub count: u64,
    pub delta_bytes: Vec<u8>,
    pub switch_bytes: Vec<u8>,
}

impl AdjacencyEntryBytes {
    /// Octets of the first encoded gap (0 for an empty list). The remainder
    /// of `delta_bytes` is the position-independent "tail" that windowed
    /// dedup matches on.
    pub fn first_delta_len(&self) -> usize {
        self.delta_bytes
            .iter()
            .position(|&b| b >= 128)
            .map_or(0, |p| p + 1)
    }

    /// Serialized length: v-byte count, then gaps, then switches.
    pub fn byte_len(&self) -> usize {
        encoded_len(self.count) + self.delta_bytes.len() + self.switch_bytes.len()
    }

    /// Append the serialized entry to `out`.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        encode_value(self.count, out).expect("count fits");
        out.extend_from_slice(&self.delta_bytes);
        out.extend_from_slice(&self.switch_bytes);
    }
}

/// Encode one adjacency list. Pairs are first brought into canonical
/// (target id, switch id) order; gaps of zero are legal and mark parallel
/// edges to the same target through different switches.
pub fn encode_adjacency(edges: &[u64], switches: &[u16]) -> Result<AdjacencyEntryBytes> {
    if edges.len() != switches.len() {
        return Err(Error::LengthMismatch {
            edges: edges.len(),
            switches: switches.len(),
        });
    }
    let mut pairs: Vec<(u64, u16)> = edges
        .iter()
        .copied()
        .zip(switches.iter().copied())
        .collect();
    pairs.sort_unstable();

    let mut delta_bytes = Vec::with_capacity(pairs.len() * 2);
    let mut switch_bytes = Vec::with_capacity(pairs.len());
    let mut last = 0u64;
    for &(id, switch) in &pairs {
        if switch > 0xff {
            return Err(Error::SwitchOverflow { switch });
        }
        encode_value(id - last, &mut delta_bytes)?;
        switch_bytes.push(switch as u8);
        last = id;
    }
    Ok(AdjacencyEntryBytes {
        count: pairs.len() as u64,
        delta_bytes,
        switch_bytes,
    })
}

/// Decode an entry back into absolute target ids (running prefix sum over
/// the gaps, starting from zero) and the paired switch ids. Scratch vectors
/// are cleared, then filled; reuse them across calls to avoid allocation.
pub fn decode_adjacency(
    entry: &AdjacencyEntryBytes,
    out_edges: &mut Vec<u64>,
    out_switches: &mut Vec<u16>,
) -> Result<()> {
    out_edges.clear();
    out_switches.clear();
    if entry.switch_bytes.len() as u64 != entry.count {
        return Err(Error::CorruptStream { offset: 0 });
    }
    let mut cursor = 0usize;
    let mut last = 0u64;
    for _ in 0..entry.count {
        let (gap, next) = decode_value(&entry.delta_bytes, cursor)?;
        cursor = next;
        last = last
            .checked_add(gap)
            .ok_or(Error::CorruptStream { offset: cursor })?;
        out_edges.push(last);
    }
    if cursor != entry.delta_bytes.len() {
        return Err(Error::CorruptStream { offset: cursor });
    }
    out_switches.extend(entry.switch_bytes.iter().map(|&s| s as u16));
    Ok(())
}

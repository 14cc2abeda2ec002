//! Compressed storage for routing-resource graphs.
//!
//! Only adjacency data is compressed; node metadata stays flat. Every node's
//! encoded entry lives in one shared byte pool, addressed by a per-node
//! 4-octet index word whose top bit tags the entry form:
//!
//! * **Inline**: v-byte edge count, gap bytes, switch octets (see
//!   [`crate::codec`]), or the flat 6-bytes-per-edge fallback layout when
//!   v-byte encoding is disabled.
//! * **Referenced**: v-byte first gap followed by the id of an earlier,
//!   inline node whose gap tail and switch bytes match exactly. Tiled
//!   fabrics repeat adjacency patterns shifted by a constant, so after gap
//!   encoding only the first value differs; the windowed dedup pass hashes
//!   each inline tail and replaces exact repeats with a reference.
//!
//! References point only at inline nodes, never chain, and are emitted only
//! when strictly smaller than the inline encoding they replace, so enabling
//! dedup can never grow the pool. Hash hits are confirmed by byte
//! comparison before a reference is written.
//!
//! A finalized [`CompressedRRG`] is immutable; [`CompressedRRG::neighbors`]
//! writes only caller-owned scratch and is safe to call from any number of
//! threads.

use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{self, encoded_len};
use crate::{Error, Result};

/// What a routing-resource node physically is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeKind {
    /// Logical net source; fans out to the equivalent output pins.
    Source,
    /// Logical net sink; fed by the equivalent input pins.
    Sink,
    /// Physical input pin.
    Ipin,
    /// Physical output pin.
    Opin,
    /// Horizontal channel wire.
    Chanx,
    /// Vertical channel wire.
    Chany,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Source,
        NodeKind::Sink,
        NodeKind::Ipin,
        NodeKind::Opin,
        NodeKind::Chanx,
        NodeKind::Chany,
    ];

    fn as_u8(self) -> u8 {
        match self {
            NodeKind::Source => 0,
            NodeKind::Sink => 1,
            NodeKind::Ipin => 2,
            NodeKind::Opin => 3,
            NodeKind::Chanx => 4,
            NodeKind::Chany => 5,
        }
    }

    fn from_u8(v: u8) -> Result<Self> {
        Self::ALL.get(v as usize).copied().ok_or(Error::Format {
            reason: format!("unknown node kind {v}"),
        })
    }
}

/// Per-node metadata: kind, grid span, pin/track class, capacity. Not part
/// of the compressed payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RRNodeMeta {
    pub kind: NodeKind,
    pub xlow: u16,
    pub ylow: u16,
    pub xhigh: u16,
    pub yhigh: u16,
    pub ptc: u32,
    pub capacity: u16,
}

/// Uncompressed routing-resource graph: metadata plus one
/// (target, switch) list per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGraph {
    pub metas: Vec<RRNodeMeta>,
    pub adjacency: Vec<Vec<(u32, u16)>>,
    pub num_switch_types: u16,
}

impl RawGraph {
    pub fn num_nodes(&self) -> usize {
        self.metas.len()
    }

    pub fn num_edges(&self) -> u64 {
        self.adjacency.iter().map(|a| a.len() as u64).sum()
    }

    /// Sort every list into canonical (target, switch) order.
    pub fn canonicalize(&mut self) {
        for list in &mut self.adjacency {
            list.sort_unstable();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metas.len() != self.adjacency.len() {
            return Err(Error::InvalidGraph {
                reason: format!(
                    "{} metas but {} adjacency lists",
                    self.metas.len(),
                    self.adjacency.len()
                ),
            });
        }
        let n = self.metas.len() as u32;
        for (i, meta) in self.metas.iter().enumerate() {
            if meta.xlow > meta.xhigh || meta.ylow > meta.yhigh {
                return Err(Error::InvalidGraph {
                    reason: format!("node {i} has an inverted span"),
                });
            }
            if meta.capacity == 0 {
                return Err(Error::InvalidGraph {
                    reason: format!("node {i} has zero capacity"),
                });
            }
            let spans_x = meta.xhigh > meta.xlow;
            let spans_y = meta.yhigh > meta.ylow;
            if (meta.kind == NodeKind::Chanx && spans_y)
                || (meta.kind == NodeKind::Chany && spans_x)
            {
                return Err(Error::InvalidGraph {
                    reason: format!("node {i} spans across its channel axis"),
                });
            }
        }
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(target, switch) in list {
                if target >= n {
                    return Err(Error::InvalidGraph {
                        reason: format!("node {i} targets nonexistent node {target}"),
                    });
                }
                if switch >= self.num_switch_types {
                    return Err(Error::InvalidGraph {
                        reason: format!("node {i} uses undeclared switch {switch}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Build-time switches for the compression ablation. Dedup requires v-byte
/// encoding; `window_size` 0 means an unbounded dedup window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub enable_vbyte: bool,
    pub enable_dedup: bool,
    pub window_size: usize,
    pub min_tail_len: usize,
    pub overhead_per_node: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            enable_vbyte: true,
            enable_dedup: true,
            window_size: 0,
            min_tail_len: 2,
            overhead_per_node: 24,
        }
    }
}

impl BuildOptions {
    /// Uncompressed facsimile: 4-byte targets + 2-byte switches.
    pub fn flat() -> Self {
        BuildOptions {
            enable_vbyte: false,
            enable_dedup: false,
            ..Default::default()
        }
    }

    /// Gap + v-byte encoding without the dedup window.
    pub fn vbyte_only() -> Self {
        BuildOptions {
            enable_dedup: false,
            ..Default::default()
        }
    }
}

/// Byte accounting for one built graph. The baseline charges the
/// conventional minimum of 6 bytes per edge (4-byte target plus 2-byte
/// switch); the compressed side is charged the pool *and* the per-node
/// index words. `total_*` additionally counts a flat per-node overhead for
/// everything the compression leaves untouched (coordinates, capacities,
/// cost fields), so the two ratios bracket adjacency-only and whole-graph
/// savings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryStats {
    pub num_nodes: u64,
    pub num_edges: u64,
    pub baseline_adjacency_bytes: u64,
    pub pool_bytes: u64,
    pub index_bytes: u64,
    pub node_overhead_bytes: u64,
    pub adjacency_ratio: f64,
    pub total_ratio: f64,
    pub referenced_node_count: u64,
}

const REF_BIT: u32 = 1 << 31;
const MAGIC: [u8; 4] = *b"RRGZ";
const VERSION: u16 = 1;
const META_BYTES: usize = 15;

/// The compressed graph: metadata, per-node index words, shared byte pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedRRG {
    metas: Vec<RRNodeMeta>,
    index: Vec<u32>,
    pool: Vec<u8>,
    num_edges: u64,
    num_switch_types: u16,
    options: BuildOptions,
    referenced_nodes: u64,
}

/// Intermediate product of the per-node encode phase; pure function of one
/// node's list, which is what makes the phase data-parallel.
struct PendingEntry {
    bytes: Vec<u8>,
    count: u32,
    head_len: u32,
    first_delta: u64,
}

impl PendingEntry {
    /// Tail slice: gap bytes past the first value, plus all switch octets.
    /// This is the position-independent part that dedup matches on.
    fn tail(&self) -> &[u8] {
        &self.bytes[self.head_len as usize..]
    }
}

fn encode_node(list: &[(u32, u16)], vbyte: bool, scratch: &mut Vec<(u32, u16)>) -> PendingEntry {
    scratch.clear();
    scratch.extend_from_slice(list);
    scratch.sort_unstable();

    let count = scratch.len() as u32;
    let mut bytes = Vec::with_capacity(1 + scratch.len() * if vbyte { 3 } else { 6 });
    codec::encode_value(count as u64, &mut bytes).expect("count fits");
    let count_len = bytes.len();

    let mut first_delta = 0u64;
    let mut first_len = 0usize;
    if vbyte {
        let mut last = 0u64;
        for (i, &(target, _)) in scratch.iter().enumerate() {
            let gap = target as u64 - last;
            codec::encode_value(gap, &mut bytes).expect("u32 range");
            if i == 0 {
                first_delta = gap;
                first_len = bytes.len() - count_len;
            }
            last = target as u64;
        }
        for &(_, switch) in scratch.iter() {
            bytes.push(switch as u8);
        }
    } else {
        for &(target, switch) in scratch.iter() {
            bytes.extend_from_slice(&target.to_le_bytes());
            bytes.extend_from_slice(&switch.to_le_bytes());
        }
    }
    PendingEntry {
        bytes,
        count,
        head_len: (count_len + first_len) as u32,
        first_delta,
    }
}

struct Candidate {
    node: u32,
    count: u32,
    tail_start: u32,
    tail_len: u32,
}

/// Most-recently-inserted pattern table. Keys are hashes of
/// (count, tail bytes); every hit is re-verified against the pool bytes, so
/// hash collisions cannot corrupt the graph.
struct DedupWindow {
    capacity: usize,
    buckets: HashMap<u64, Vec<Candidate>>,
    fifo: VecDeque<(u64, u32)>,
}

impl DedupWindow {
    fn new(capacity: usize) -> Self {
        DedupWindow {
            capacity,
            buckets: HashMap::new(),
            fifo: VecDeque::new(),
        }
    }

    fn hash_pattern(count: u32, tail: &[u8]) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        count.hash(&mut h);
        tail.hash(&mut h);
        h.finish()
    }

    fn find(&self, hash: u64, count: u32, tail: &[u8], pool: &[u8]) -> Option<u32> {
        let bucket = self.buckets.get(&hash)?;
        bucket
            .iter()
            .find(|c| {
                c.count == count
                    && pool[c.tail_start as usize..(c.tail_start + c.tail_len) as usize] == *tail
            })
            .map(|c| c.node)
    }

    fn insert(&mut self, hash: u64, candidate: Candidate) {
        let node = candidate.node;
        self.buckets.entry(hash).or_default().push(candidate);
        self.fifo.push_back((hash, node));
        if self.capacity > 0 && self.fifo.len() > self.capacity {
            let (old_hash, old_node) = self.fifo.pop_front().expect("nonempty");
            if let Some(bucket) = self.buckets.get_mut(&old_hash) {
                bucket.retain(|c| c.node != old_node);
                if bucket.is_empty() {
                    self.buckets.remove(&old_hash);
                }
            }
        }
    }
}

/// Build a [`CompressedRRG`] sequentially. See [`par_build`] for the
/// rayon-backed variant; both produce bit-identical output.
pub fn build(raw: &RawGraph, opts: &BuildOptions) -> Result<CompressedRRG> {
    validate_build_inputs(raw, opts)?;
    let mut scratch = Vec::new();
    let entries: Vec<PendingEntry> = raw
        .adjacency
        .iter()
        .map(|list| encode_node(list, opts.enable_vbyte, &mut scratch))
        .collect();
    assemble(raw, opts, entries)
}

/// Data-parallel build: per-node encoding fans out across the rayon pool,
/// then the order-dependent dedup pass runs sequentially over the encoded
/// entries. Output is bit-identical to [`build`].
#[cfg(feature = "parallel")]
pub fn par_build(raw: &RawGraph, opts: &BuildOptions) -> Result<CompressedRRG> {
    use rayon::prelude::*;
    validate_build_inputs(raw, opts)?;
    let vbyte = opts.enable_vbyte;
    let entries: Vec<PendingEntry> = raw
        .adjacency
        .par_iter()
        .map_init(Vec::new, |scratch, list| encode_node(list, vbyte, scratch))
        .collect();
    assemble(raw, opts, entries)
}

fn validate_build_inputs(raw: &RawGraph, opts: &BuildOptions) -> Result<()> {
    if raw.num_switch_types > 256 {
        return Err(Error::TooManySwitchTypes {
            count: raw.num_switch_types as u32,
        });
    }
    if opts.enable_dedup && !opts.enable_vbyte {
        return Err(Error::DedupRequiresVbyte);
    }
    raw.validate()
}

fn assemble(
    raw: &RawGraph,
    opts: &BuildOptions,
    entries: Vec<PendingEntry>,
) -> Result<CompressedRRG> {
    let mut pool: Vec<u8> = Vec::new();
    let mut index: Vec<u32> = Vec::with_capacity(entries.len());
    let mut window = DedupWindow::new(opts.window_size);
    let mut referenced_nodes = 0u64;
    let mut num_edges = 0u64;

    for (node, entry) in entries.iter().enumerate() {
        num_edges += entry.count as u64;
        let offset = pool.len();
        if offset >= REF_BIT as usize {
            return Err(Error::InvalidGraph {
                reason: "adjacency pool exceeds the 2 GiB index limit".into(),
            });
        }

        // Nodes with short tails are never worth a reference: the two
        // reference values cost as much as the data they replace.
        let eligible = opts.enable_dedup && entry.count as usize > opts.min_tail_len;
        if eligible {
            let tail = entry.tail();
            let hash = DedupWindow::hash_pattern(entry.count, tail);
            if let Some(referent) = window.find(hash, entry.count, tail, &pool) {
                let ref_len = encoded_len(entry.first_delta) + encoded_len(referent as u64);
                if ref_len < entry.bytes.len() {
                    index.push(offset as u32 | REF_BIT);
                    codec::encode_value(entry.first_delta, &mut pool).expect("fits");
                    codec::encode_value(referent as u64, &mut pool).expect("fits");
                    referenced_nodes += 1;
                    continue;
                }
            }
            window.insert(
                hash,
                Candidate {
                    node: node as u32,
                    count: entry.count,
                    tail_start: (offset + entry.head_len as usize) as u32,
                    tail_len: tail.len() as u32,
                },
            );
        }
        index.push(offset as u32);
        pool.extend_from_slice(&entry.bytes);
    }

    Ok(CompressedRRG {
        metas: raw.metas.clone(),
        index,
        pool,
        num_edges,
        num_switch_types: raw.num_switch_types,
        options: *opts,
        referenced_nodes,
    })
}

impl CompressedRRG {
    pub fn num_nodes(&self) -> usize {
        self.metas.len()
    }

    pub fn num_edges(&self) -> u64 {
        self.num_edges
    }

    pub fn num_switch_types(&self) -> u16 {
        self.num_switch_types
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    pub fn meta(&self, node: u32) -> &RRNodeMeta {
        &self.metas[node as usize]
    }

    pub fn metas(&self) -> &[RRNodeMeta] {
        &self.metas
    }

    /// True when the node's entry is a reference into another node's data.
    pub fn is_referenced(&self, node: u32) -> bool {
        self.index[node as usize] & REF_BIT != 0
    }

    /// For a referenced node: its own first gap and the referent id.
    pub fn referenced_info(&self, node: u32) -> Option<(u64, u32)> {
        if !self.is_referenced(node) {
            return None;
        }
        let offset = (self.index[node as usize] & !REF_BIT) as usize;
        let (first_delta, cursor) = codec::decode_value(&self.pool, offset).expect("validated");
        let (referent, _) = codec::decode_value(&self.pool, cursor).expect("validated");
        Some((first_delta, referent as u32))
    }

    /// For an inline node: octet counts of its pool entry, split by section.
    pub fn inline_entry_info(&self, node: u32) -> Option<InlineEntryInfo> {
        if self.is_referenced(node) {
            return None;
        }
        let offset = (self.index[node as usize] & !REF_BIT) as usize;
        let (count, mut cursor) = codec::decode_value(&self.pool, offset).expect("validated");
        let count_octets = cursor - offset;
        let delta_octets;
        let switch_octets;
        if self.options.enable_vbyte {
            let delta_start = cursor;
            for _ in 0..count {
                cursor = codec::decode_value(&self.pool, cursor)
                    .expect("validated")
                    .1;
            }
            delta_octets = cursor - delta_start;
            switch_octets = count as usize;
        } else {
            delta_octets = count as usize * 4;
            switch_octets = count as usize * 2;
        }
        Some(InlineEntryInfo {
            count,
            count_octets,
            delta_octets,
            switch_octets,
        })
    }

    /// Decode one node's adjacency into caller-owned scratch: absolute
    /// target ids in canonical order plus their switch ids. Referenced
    /// entries resolve through the referent's tail in the same single pass.
    pub fn neighbors(&self, node: u32, out_edges: &mut Vec<u32>, out_switches: &mut Vec<u16>) {
        out_edges.clear();
        out_switches.clear();
        let word = self.index[node as usize];
        let offset = (word & !REF_BIT) as usize;
        if word & REF_BIT == 0 {
            self.decode_inline(offset, None, out_edges, out_switches)
                .expect("entry validated at build/load");
        } else {
            let (first, cursor) = codec::decode_value(&self.pool, offset).expect("validated");
            let (referent, _) = codec::decode_value(&self.pool, cursor).expect("validated");
            let ref_word = self.index[referent as usize];
            debug_assert_eq!(ref_word & REF_BIT, 0, "references never chain");
            self.decode_inline(
                (ref_word & !REF_BIT) as usize,
                Some(first),
                out_edges,
                out_switches,
            )
            .expect("entry validated at build/load");
        }
    }

    /// Inline decode; with `first_override` the entry acts as a borrowed
    /// tail: the caller's first id replaces the stored first gap.
    fn decode_inline(
        &self,
        offset: usize,
        first_override: Option<u64>,
        out_edges: &mut Vec<u32>,
        out_switches: &mut Vec<u16>,
    ) -> Result<()> {
        let pool = &self.pool;
        let (count, mut cursor) = codec::decode_value(pool, offset)?;
        if self.options.enable_vbyte {
            let mut last = 0u64;
            for i in 0..count {
                let (gap, next) = codec::decode_value(pool, cursor)?;
                cursor = next;
                if i == 0 {
                    last = first_override.unwrap_or(gap);
                } else {
                    last += gap;
                }
                if last > u32::MAX as u64 {
                    return Err(Error::CorruptStream { offset: cursor });
                }
                out_edges.push(last as u32);
            }
            for i in 0..count as usize {
                let octet = *pool
                    .get(cursor + i)
                    .ok_or(Error::TruncatedStream { offset: cursor + i })?;
                out_switches.push(octet as u16);
            }
        } else {
            debug_assert!(
                first_override.is_none(),
                "flat entries are never referenced"
            );
            for _ in 0..count {
                let t = pool
                    .get(cursor..cursor + 4)
                    .ok_or(Error::TruncatedStream { offset: cursor })?;
                out_edges.push(u32::from_le_bytes(t.try_into().unwrap()));
                let s = pool
                    .get(cursor + 4..cursor + 6)
                    .ok_or(Error::TruncatedStream { offset: cursor })?;
                out_switches.push(u16::from_le_bytes(s.try_into().unwrap()));
                cursor += 6;
            }
        }
        Ok(())
    }

    /// Visit every edge as (source, target, switch).
    pub fn for_each_edge<F: FnMut(u32, u32, u16)>(&self, mut f: F) {
        let mut edges = Vec::new();
        let mut switches = Vec::new();
        for node in 0..self.num_nodes() as u32 {
            self.neighbors(node, &mut edges, &mut switches);
            for (&t, &s) in edges.iter().zip(&switches) {
                f(node, t, s);
            }
        }
    }

    /// Decode the whole graph back to its flat form.
    pub fn to_raw_graph(&self) -> RawGraph {
        let mut adjacency = Vec::with_capacity(self.num_nodes());
        let mut edges = Vec::new();
        let mut switches = Vec::new();
        for node in 0..self.num_nodes() as u32 {
            self.neighbors(node, &mut edges, &mut switches);
            adjacency.push(
                edges
                    .iter()
                    .copied()
                    .zip(switches.iter().copied())
                    .collect(),
            );
        }
        RawGraph {
            metas: self.metas.clone(),
            adjacency,
            num_switch_types: self.num_switch_types,
        }
    }

    /// Byte accounting; deterministic for a built graph.
    pub fn stats(&self) -> MemoryStats {
        let num_nodes = self.num_nodes() as u64;
        let baseline = 6 * self.num_edges;
        let pool_bytes = self.pool.len() as u64;
        let index_bytes = 4 * num_nodes;
        let overhead = self.options.overhead_per_node as u64 * num_nodes;
        let compressed = pool_bytes + index_bytes;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        MemoryStats {
            num_nodes,
            num_edges: self.num_edges,
            baseline_adjacency_bytes: baseline,
            pool_bytes,
            index_bytes,
            node_overhead_bytes: overhead,
            adjacency_ratio: ratio(baseline, compressed),
            total_ratio: ratio(baseline + overhead, compressed + overhead),
            referenced_node_count: self.referenced_nodes,
        }
    }

    pub fn dump<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut file)
    }

    /// Serialize as an `RRGZ` container: magic, version, options, counts,
    /// metas, index words, pool bytes; all little-endian, pool verbatim.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[
            self.options.enable_vbyte as u8,
            self.options.enable_dedup as u8,
        ])?;
        w.write_all(&(self.options.window_size as u64).to_le_bytes())?;
        w.write_all(&(self.options.min_tail_len as u32).to_le_bytes())?;
        w.write_all(&(self.options.overhead_per_node as u32).to_le_bytes())?;
        w.write_all(&self.num_switch_types.to_le_bytes())?;
        w.write_all(&(self.metas.len() as u64).to_le_bytes())?;
        w.write_all(&self.num_edges.to_le_bytes())?;
        w.write_all(&self.referenced_nodes.to_le_bytes())?;
        for meta in &self.metas {
            w.write_all(&[meta.kind.as_u8()])?;
            w.write_all(&meta.xlow.to_le_bytes())?;
            w.write_all(&meta.ylow.to_le_bytes())?;
            w.write_all(&meta.xhigh.to_le_bytes())?;
            w.write_all(&meta.yhigh.to_le_bytes())?;
            w.write_all(&meta.ptc.to_le_bytes())?;
            w.write_all(&meta.capacity.to_le_bytes())?;
        }
        for &word in &self.index {
            w.write_all(&word.to_le_bytes())?;
        }
        w.write_all(&(self.pool.len() as u64).to_le_bytes())?;
        w.write_all(&self.pool)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let truncated = |what: &str| Error::Format {
            reason: format!("file ends inside {what}"),
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| truncated("magic"))?;
        if magic != MAGIC {
            return Err(Error::Format {
                reason: "bad magic; not an RRGZ file".into(),
            });
        }
        let version = read_u16(r).map_err(|_| truncated("version"))?;
        if version != VERSION {
            return Err(Error::Format {
                reason: format!("unsupported version {version}"),
            });
        }
        let mut flags = [0u8; 2];
        r.read_exact(&mut flags).map_err(|_| truncated("options"))?;
        let options = BuildOptions {
            enable_vbyte: flags[0] != 0,
            enable_dedup: flags[1] != 0,
            window_size: read_u64(r).map_err(|_| truncated("options"))? as usize,
            min_tail_len: read_u32(r).map_err(|_| truncated("options"))? as usize,
            overhead_per_node: read_u32(r).map_err(|_| truncated("options"))? as usize,
        };
        let num_switch_types = read_u16(r).map_err(|_| truncated("header"))?;
        let num_nodes = read_u64(r).map_err(|_| truncated("header"))? as usize;
        let num_edges = read_u64(r).map_err(|_| truncated("header"))?;
        let referenced_nodes = read_u64(r).map_err(|_| truncated("header"))?;

        let mut metas = Vec::with_capacity(num_nodes.min(1 << 24));
        let mut buf = [0u8; META_BYTES];
        for _ in 0..num_nodes {
            r.read_exact(&mut buf)
                .map_err(|_| truncated("node metadata"))?;
            metas.push(RRNodeMeta {
                kind: NodeKind::from_u8(buf[0])?,
                xlow: u16::from_le_bytes([buf[1], buf[2]]),
                ylow: u16::from_le_bytes([buf[3], buf[4]]),
                xhigh: u16::from_le_bytes([buf[5], buf[6]]),
                yhigh: u16::from_le_bytes([buf[7], buf[8]]),
                ptc: u32::from_le_bytes([buf[9], buf[10], buf[11], buf[12]]),
                capacity: u16::from_le_bytes([buf[13], buf[14]]),
            });
        }
        let mut index = Vec::with_capacity(num_nodes.min(1 << 24));
        for _ in 0..num_nodes {
            index.push(read_u32(r).map_err(|_| truncated("index"))?);
        }
        let pool_len = read_u64(r).map_err(|_| truncated("pool length"))? as usize;
        let mut pool = vec![0u8; pool_len];
        r.read_exact(&mut pool).map_err(|_| truncated("pool"))?;

        let graph = CompressedRRG {
            metas,
            index,
            pool,
            num_edges,
            num_switch_types,
            options,
            referenced_nodes,
        };
        graph.verify()?;
        Ok(graph)
    }

    /// Full decode sweep over an untrusted container so that `neighbors`
    /// can assume well-formed entries afterwards.
    fn verify(&self) -> Result<()> {
        let n = self.num_nodes();
        let format = |reason: String| Error::Format { reason };
        let mut last_offset = None;
        let mut edges = 0u64;
        let mut referenced = 0u64;
        let mut out_edges = Vec::new();
        let mut out_switches = Vec::new();
        for node in 0..n {
            let word = self.index[node];
            let offset = (word & !REF_BIT) as usize;
            if offset >= self.pool.len() && !(self.pool.is_empty() && offset == 0) {
                return Err(format(format!("node {node} points past the pool")));
            }
            if let Some(prev) = last_offset {
                if offset <= prev {
                    return Err(format(format!(
                        "index offsets not increasing at node {node}"
                    )));
                }
            }
            last_offset = Some(offset);
            let (probe_offset, first) = if word & REF_BIT != 0 {
                if !self.options.enable_dedup {
                    return Err(format(format!("node {node} referenced but dedup disabled")));
                }
                let (first_delta, cursor) = codec::decode_value(&self.pool, offset)
                    .map_err(|e| format(format!("node {node}: {e}")))?;
                let (referent, _) = codec::decode_value(&self.pool, cursor)
                    .map_err(|e| format(format!("node {node}: {e}")))?;
                if referent >= node as u64 {
                    return Err(format(format!("node {node} references a later node")));
                }
                if self.index[referent as usize] & REF_BIT != 0 {
                    return Err(format(format!("node {node} references a referenced node")));
                }
                referenced += 1;
                (
                    (self.index[referent as usize] & !REF_BIT) as usize,
                    Some(first_delta),
                )
            } else {
                (offset, None)
            };
            out_edges.clear();
            out_switches.clear();
            self.decode_inline(probe_offset, first, &mut out_edges, &mut out_switches)
                .map_err(|e| format(format!("node {node}: {e}")))?;
            for &t in &out_edges {
                if t as usize >= n {
                    return Err(format(format!("node {node} targets nonexistent node {t}")));
                }
            }
            edges += out_edges.len() as u64;
        }
        if edges != self.num_edges {
            return Err(format(format!(
                "header claims {} edges but entries decode to {edges}",
                self.num_edges
            )));
        }
        if referenced != self.referenced_nodes {
            return Err(format(format!(
                "header claims {} referenced nodes but index tags {referenced}",
                self.referenced_nodes
            )));
        }
        Ok(())
    }
}

/// Per-entry octet breakdown, see [`CompressedRRG::inline_entry_info`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InlineEntryInfo {
    pub count: u64,
    pub count_octets: usize,
    pub delta_octets: usize,
    pub switch_octets: usize,
}

fn read_u16<R: Read>(r: &mut R) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Gap-size statistics over a graph's canonical adjacency lists.
///
/// "Tail" gaps are the differences between consecutive sorted targets,
/// the quantity locality and renumbering act on. The first value of each
/// list is an absolute anchor (its magnitude tracks the node's position,
/// not the numbering quality), so it is reported in the all-gaps mean but
/// kept out of the tail figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaStats {
    /// Mean over every stored gap, anchors included.
    pub mean_abs_delta: f64,
    /// Mean over consecutive-target gaps only.
    pub mean_tail_delta: f64,
    pub p95_tail_delta: u64,
    pub max_tail_delta: u64,
    pub total_deltas: u64,
}

pub fn delta_statistics(raw: &RawGraph) -> DeltaStats {
    let mut tails: Vec<u64> = Vec::new();
    let mut sum = 0u128;
    let mut tail_sum = 0u128;
    let mut total = 0u64;
    let mut sorted = Vec::new();
    for list in &raw.adjacency {
        sorted.clear();
        sorted.extend(list.iter().map(|&(t, _)| t as u64));
        sorted.sort_unstable();
        let mut last = 0u64;
        for (i, &t) in sorted.iter().enumerate() {
            let gap = t - last;
            sum += gap as u128;
            total += 1;
            if i > 0 {
                tail_sum += gap as u128;
                tails.push(gap);
            }
            last = t;
        }
    }
    tails.sort_unstable();
    let p95 = if tails.is_empty() {
        0
    } else {
        tails[(tails.len() - 1).min(tails.len() * 95 / 100)]
    };
    DeltaStats {
        mean_abs_delta: if total == 0 {
            0.0
        } else {
            sum as f64 / total as f64
        },
        mean_tail_delta: if tails.is_empty() {
            0.0
        } else {
            tail_sum as f64 / tails.len() as f64
        },
        p95_tail_delta: p95,
        max_tail_delta: tails.last().copied().unwrap_or(0),
        total_deltas: total,
    }
}

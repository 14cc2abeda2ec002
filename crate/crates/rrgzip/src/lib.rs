//! Compressed routing-resource graphs (RRGs) for FPGA detailed routing.
//!
//! An RRG describes every wire, pin and programmable switch of an FPGA as a
//! directed graph; its adjacency lists dominate the router's memory
//! footprint. This crate stores those lists compressed (sorted-delta gaps
//! packed as variable-byte integers, with a windowed deduplication pass that
//! replaces repeated gap patterns by a reference to an earlier node) and
//! decodes them on the fly during neighbor expansion, so the router never
//! needs the flat form in memory.
//!
//! The crate is organized around the pipeline:
//!
//! * [`archgen`]: deterministic synthetic island-style FPGA generator
//!   (grid of logic tiles, channels, switch blocks) plus seeded netlists.
//! * [`codec`]: the per-list delta + v-byte encoding and its inverse.
//! * [`graphstore`]: builds and holds the compressed graph (shared byte
//!   pool, per-node index, dedup window, memory accounting, and the `RRGZ`
//!   binary container).
//! * [`reorder`]: optional reverse Cuthill-McKee renumbering before
//!   compression, with bandwidth and sparsity diagnostics.
//! * [`router`]: negotiated-congestion detailed router whose neighbor
//!   expansion runs through either the flat or the compressed adjacency
//!   provider, byte-for-byte deterministically.
//!
//! Graph builds have a data-parallel encode phase; enable the `parallel`
//! feature (on by default) for the rayon-backed [`graphstore::par_build`],
//! which produces bit-identical output to the sequential build.

pub mod archgen;
pub mod codec;
pub mod graphstore;
pub mod reorder;
pub mod router;

pub use graphstore::{BuildOptions, CompressedRRG, MemoryStats, NodeKind, RRNodeMeta, RawGraph};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Value exceeds the 9-digit (2^63 − 1) encoding cap.
    #[error("value {value} exceeds the encodable range")]
    ValueTooLarge { value: u64 },
    /// A v-byte stream ended before its terminating octet.
    #[error("byte stream truncated at offset {offset}")]
    TruncatedStream { offset: usize },
    /// A v-byte stream decoded to something impossible (overflow, bad
    /// framing); distinct from plain truncation.
    #[error("corrupt byte stream at offset {offset}")]
    CorruptStream { offset: usize },
    /// Edge and switch lists must pair up one-to-one.
    #[error("adjacency lists disagree in length: {edges} edges vs {switches} switches")]
    LengthMismatch { edges: usize, switches: usize },
    /// Switch ids are stored as one octet each.
    #[error("switch id {switch} does not fit in one octet")]
    SwitchOverflow { switch: u16 },
    /// Build-time rejection of graphs with too many switch types.
    #[error("graph declares {count} switch types; at most 256 are supported")]
    TooManySwitchTypes { count: u32 },
    /// Windowed dedup stores references into the v-byte stream, so it
    /// cannot be combined with the flat fallback layout.
    #[error("dedup requires v-byte encoding to be enabled")]
    DedupRequiresVbyte,
    /// Structural problem in an input graph (dangling target, bad switch
    /// id, inconsistent metadata).
    #[error("invalid graph: {reason}")]
    InvalidGraph { reason: String },
    /// Malformed `RRGZ` container.
    #[error("bad graph file: {reason}")]
    Format { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Rejected generator or CLI parameter.
    #[error("invalid parameter: {reason}")]
    Param { reason: String },
    /// Permutation does not match the graph it is applied to.
    #[error("permutation covers {permutation} nodes but the graph has {graph}")]
    PermutationSizeMismatch { permutation: usize, graph: usize },
    /// A net's sink cannot be reached from its source at any cost.
    #[error("net {net} is unroutable: no path to sink {sink}")]
    Unroutable { net: String, sink: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

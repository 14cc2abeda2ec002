//! Deterministic synthetic island-style FPGA generator.
//!
//! Produces a routing-resource graph for a `grid_w × grid_h` array of logic
//! tiles ringed by I/O pads, with horizontal (`CHANX`) and vertical
//! (`CHANY`) routing channels of `channel_width` wires cut into
//! length-`seg_len` segments with staggered starts. Pins connect to channel
//! wires through connection blocks (the `fc_in`/`fc_out` fractions), wire
//! ends meet at switch blocks (disjoint or Wilton-style lane rotation), and
//! hetero columns swap the logic tile for RAM/DSP blocks with their own pin
//! counts.
//!
//! Nodes are created tile-major, all of one tile's nodes before the next
//! tile's, so connected resources get nearby ids. That
//! spatial locality is what keeps the gap encoding small, and the tile
//! repetition is what the dedup window exploits: interior tiles of a
//! homogeneous device produce adjacency lists whose gap tails are
//! identical, shifted copies of one another.
//!
//! Heterogeneous hard blocks are the exception: their pin nodes are
//! appended column by column *after* the regular fabric scan, the way
//! hard-IP resources are typically bolted onto a base fabric in a later
//! pass. Their adjacency therefore lands far off the diagonal, which is
//! precisely the structure node renumbering is able to repair.
//!
//! Everything is a pure function of [`ArchParams`]; the same parameters
//! always yield byte-identical graphs and netlists.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graphstore::{NodeKind, RRNodeMeta, RawGraph};
use crate::{Error, Result};

/// Logical hookup between a net terminal and its physical pins.
pub const SW_PASS: u16 = 0;
/// Connection-block input mux (wire → IPIN).
pub const SW_INPUT_MUX: u16 = 1;
/// Output pin driver (OPIN → wire).
pub const SW_DRIVER: u16 = 2;
/// Switch-block pass transistor (wire ↔ wire).
pub const SW_SB: u16 = 3;

const NUM_SWITCH_TYPES: u16 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchBlockKind {
    /// Wire ends connect to the same lane in the other directions.
    Disjoint,
    /// Lane-rotating turns, for more diverse junction patterns.
    Wilton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Ram,
    Dsp,
}

/// One column of heterogeneous blocks replacing the logic tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeteroColumn {
    pub column: u16,
    pub kind: BlockKind,
    pub inputs: u16,
    pub outputs: u16,
}

/// Generator parameters; serialized as the JSON config the CLI reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchParams {
    pub grid_w: u16,
    pub grid_h: u16,
    pub channel_width: u16,
    pub seg_len: u16,
    pub fc_in: f64,
    pub fc_out: f64,
    pub clb_inputs: u16,
    pub clb_outputs: u16,
    pub switch_block: SwitchBlockKind,
    pub hetero_columns: Vec<HeteroColumn>,
    pub io_per_side: u16,
    pub seed: u64,
}

impl Default for ArchParams {
    fn default() -> Self {
        ArchParams {
            grid_w: 20,
            grid_h: 20,
            channel_width: 32,
            seg_len: 4,
            fc_in: 0.15,
            fc_out: 0.25,
            clb_inputs: 22,
            clb_outputs: 10,
            switch_block: SwitchBlockKind::Disjoint,
            hetero_columns: Vec::new(),
            io_per_side: 6,
            seed: 1,
        }
    }
}

impl ArchParams {
    /// Default heterogeneous companion: alternating RAM and DSP columns on
    /// every other column from x = 4, with pin counts well away from the
    /// logic tile's so the tile stride is thoroughly disturbed.
    pub fn hetero_default() -> Self {
        Self::hetero_with_grid(20, 20)
    }

    /// The heterogeneous column pattern at an arbitrary grid size.
    pub fn hetero_with_grid(grid_w: u16, grid_h: u16) -> Self {
        let mut p = ArchParams {
            grid_w,
            grid_h,
            ..Default::default()
        };
        let mut col = 4u16;
        let mut ram = true;
        while col + 2 <= p.grid_w {
            p.hetero_columns.push(if ram {
                HeteroColumn {
                    column: col,
                    kind: BlockKind::Ram,
                    inputs: 44,
                    outputs: 16,
                }
            } else {
                HeteroColumn {
                    column: col,
                    kind: BlockKind::Dsp,
                    inputs: 52,
                    outputs: 20,
                }
            });
            ram = !ram;
            col += 2;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let err = |reason: String| Err(Error::Param { reason });
        if self.grid_w < 2 || self.grid_h < 2 {
            return err(format!(
                "grid {}x{} is degenerate; need at least 2x2",
                self.grid_w, self.grid_h
            ));
        }
        if self.channel_width == 0 {
            return err("channel_width must be at least 1".into());
        }
        if self.seg_len == 0 {
            return err("seg_len must be at least 1".into());
        }
        for (name, fc) in [("fc_in", self.fc_in), ("fc_out", self.fc_out)] {
            if !(fc > 0.0 && fc <= 1.0) {
                return err(format!("{name} must be in (0, 1], got {fc}"));
            }
        }
        if self.clb_inputs == 0 || self.clb_outputs == 0 {
            return err("logic blocks need at least one input and one output".into());
        }
        let mut seen = vec![false; self.grid_w as usize + 1];
        for h in &self.hetero_columns {
            if h.column < 1 || h.column > self.grid_w {
                return err(format!("hetero column {} outside the grid", h.column));
            }
            if std::mem::replace(&mut seen[h.column as usize], true) {
                return err(format!("hetero column {} listed twice", h.column));
            }
            if h.inputs == 0 || h.outputs == 0 {
                return err(format!(
                    "hetero column {} needs at least one input and output",
                    h.column
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: u16,
    hi: u16,
    node: u32,
}

/// Per-channel, per-lane segment lists, ordered by start coordinate.
struct ChannelSet {
    /// `lanes[channel_index][lane]`; channel index is the row for CHANX,
    /// the column for CHANY.
    lanes: Vec<Vec<Vec<Segment>>>,
}

impl ChannelSet {
    fn covering(&self, channel: usize, lane: usize, pos: u16) -> Option<&Segment> {
        let segs = &self.lanes[channel][lane];
        let first = segs.first()?;
        if pos < first.lo || pos > segs.last()?.hi {
            return None;
        }
        let idx = segs.partition_point(|s| s.lo <= pos) - 1;
        Some(&segs[idx])
    }

    fn ending_at(&self, channel: usize, lane: usize, pos: u16) -> Option<&Segment> {
        self.covering(channel, lane, pos).filter(|s| s.hi == pos)
    }

    fn starting_at(&self, channel: usize, lane: usize, pos: u16) -> Option<&Segment> {
        self.covering(channel, lane, pos).filter(|s| s.lo == pos)
    }

    /// Segment spanning both `pos` and `pos + 1` (a wire passing the
    /// junction between them without terminating).
    fn passing(&self, channel: usize, lane: usize, pos: u16) -> Option<&Segment> {
        self.covering(channel, lane, pos)
            .filter(|s| s.lo <= pos && s.hi > pos)
    }
}

struct Block {
    source: u32,
    sink: u32,
    opins: Vec<u32>,
    ipins: Vec<u32>,
}

/// Cut one lane of a channel of length `len` (coordinates 1..=len) into
/// segments of `seg_len` tiles, staggered by the lane's phase so starts are
/// spread across tiles. The first segment of a nonzero-phase lane is
/// clipped short; the last segment clips at the channel end.
fn lane_breaks(len: u16, seg_len: u16, phase: u16) -> Vec<(u16, u16)> {
    let mut spans = Vec::new();
    let mut lo = 1u16;
    loop {
        let hi = if lo == 1 && phase > 0 {
            phase.min(len)
        } else {
            (lo + seg_len - 1).min(len)
        };
        spans.push((lo, hi));
        if hi >= len {
            return spans;
        }
        lo = hi + 1;
    }
}

/// Which lanes pin `ptc` taps: evenly spread over the channel with a
/// per-pin offset. Deliberately independent of the tile position so that
/// every tile's connection pattern is a shifted copy. Lanes of one logic
/// pin then share a phase, which keeps the per-tile pattern classes
/// coarse; that is what the dedup window feeds on.
fn pin_lane(ptc: u16, j: usize, width: usize, k: usize) -> usize {
    (ptc as usize * 7 + j * (width / k)) % width
}

fn fc_count(fc: f64, width: u16) -> usize {
    ((fc * width as f64).round() as usize).clamp(1, width as usize)
}

fn turn_lane(sb: SwitchBlockKind, t: usize, w: usize, corner: u8) -> usize {
    match sb {
        SwitchBlockKind::Disjoint => t,
        SwitchBlockKind::Wilton => match corner {
            0 | 3 => (t + 1) % w, // end-from-west↔down, start-east↔up
            1 | 2 => (w - t) % w, // end-from-west↔up, start-east↔down
            _ => t,               // passing wires keep their lane
        },
    }
}

/// Build the routing-resource graph for `p`. Deterministic; adjacency
/// lists come back in canonical (target, switch) order.
pub fn generate_rrg(p: &ArchParams) -> Result<RawGraph> {
    p.validate()?;
    let gw = p.grid_w;
    let gh = p.grid_h;
    let w = p.channel_width as usize;

    let hetero: HashMap<u16, HeteroColumn> =
        p.hetero_columns.iter().map(|h| (h.column, *h)).collect();
    let block_shape = |x: u16| -> (u16, u16) {
        hetero
            .get(&x)
            .map_or((p.clb_inputs, p.clb_outputs), |h| (h.inputs, h.outputs))
    };

    let mut metas: Vec<RRNodeMeta> = Vec::new();
    let mut blocks: Vec<Vec<Option<Block>>> = (0..=gh + 1)
        .map(|_| (0..=gw + 1).map(|_| None).collect())
        .collect();
    let mut io_pads: Vec<Vec<Vec<Block>>> = (0..=gh + 1)
        .map(|_| (0..=gw + 1).map(|_| Vec::new()).collect())
        .collect();
    let mut chanx = ChannelSet {
        lanes: (0..=gh).map(|_| vec![Vec::new(); w]).collect(),
    };
    let mut chany = ChannelSet {
        lanes: (0..=gw).map(|_| vec![Vec::new(); w]).collect(),
    };

    // Pass 1: create nodes tile-major (per (x, y), kinds grouped within the
    // tile), assigning ids in creation order.
    let push_meta = |meta: RRNodeMeta, metas: &mut Vec<RRNodeMeta>| -> u32 {
        metas.push(meta);
        (metas.len() - 1) as u32
    };
    let pin_meta = |kind: NodeKind, x: u16, y: u16, ptc: u32, capacity: u16| RRNodeMeta {
        kind,
        xlow: x,
        ylow: y,
        xhigh: x,
        yhigh: y,
        ptc,
        capacity,
    };

    for y in 0..=gh + 1 {
        for x in 0..=gw + 1 {
            let on_x_border = x == 0 || x == gw + 1;
            let on_y_border = y == 0 || y == gh + 1;
            if on_x_border && on_y_border {
                // Corners are empty.
            } else if on_x_border || on_y_border {
                // I/O tile: io_per_side pads, each one source/sink/opin/ipin.
                let pads = p.io_per_side as u32;
                let base = metas.len() as u32;
                for ptc in 0..pads {
                    push_meta(pin_meta(NodeKind::Source, x, y, ptc, 1), &mut metas);
                }
                for ptc in 0..pads {
                    push_meta(pin_meta(NodeKind::Sink, x, y, ptc, 1), &mut metas);
                }
                for ptc in 0..pads {
                    push_meta(pin_meta(NodeKind::Opin, x, y, ptc, 1), &mut metas);
                }
                for ptc in 0..pads {
                    push_meta(pin_meta(NodeKind::Ipin, x, y, ptc, 1), &mut metas);
                }
                for pad in 0..pads {
                    io_pads[y as usize][x as usize].push(Block {
                        source: base + pad,
                        sink: base + pads + pad,
                        opins: vec![base + 2 * pads + pad],
                        ipins: vec![base + 3 * pads + pad],
                    });
                }
            } else if !hetero.contains_key(&x) {
                let (inputs, outputs) = block_shape(x);
                let source = push_meta(pin_meta(NodeKind::Source, x, y, 0, outputs), &mut metas);
                let sink = push_meta(pin_meta(NodeKind::Sink, x, y, 0, inputs), &mut metas);
                let opins: Vec<u32> = (0..outputs)
                    .map(|ptc| push_meta(pin_meta(NodeKind::Opin, x, y, ptc as u32, 1), &mut metas))
                    .collect();
                let ipins: Vec<u32> = (0..inputs)
                    .map(|ptc| push_meta(pin_meta(NodeKind::Ipin, x, y, ptc as u32, 1), &mut metas))
                    .collect();
                blocks[y as usize][x as usize] = Some(Block {
                    source,
                    sink,
                    opins,
                    ipins,
                });
            }

            // CHANX row y (between tile rows y and y+1) exists for y ≤ gh;
            // this tile creates the segments that start at column x.
            if y <= gh && (1..=gw).contains(&x) {
                for t in 0..w {
                    let phase = (t as u16) % p.seg_len;
                    for (lo, hi) in lane_breaks(gw, p.seg_len, phase) {
                        if lo != x {
                            continue;
                        }
                        let node = push_meta(
                            RRNodeMeta {
                                kind: NodeKind::Chanx,
                                xlow: lo,
                                ylow: y,
                                xhigh: hi,
                                yhigh: y,
                                ptc: t as u32,
                                capacity: 1,
                            },
                            &mut metas,
                        );
                        chanx.lanes[y as usize][t].push(Segment { lo, hi, node });
                    }
                }
            }
            // CHANY column x exists for x ≤ gw; segments starting at row y.
            if x <= gw && (1..=gh).contains(&y) {
                for t in 0..w {
                    let phase = (t as u16) % p.seg_len;
                    for (lo, hi) in lane_breaks(gh, p.seg_len, phase) {
                        if lo != y {
                            continue;
                        }
                        let node = push_meta(
                            RRNodeMeta {
                                kind: NodeKind::Chany,
                                xlow: x,
                                ylow: lo,
                                xhigh: x,
                                yhigh: hi,
                                ptc: t as u32,
                                capacity: 1,
                            },
                            &mut metas,
                        );
                        chany.lanes[x as usize][t].push(Segment { lo, hi, node });
                    }
                }
            }
        }
    }

    // Appended pass: hetero hard blocks, grouped by column.
    let mut hetero_cols: Vec<&HeteroColumn> = p.hetero_columns.iter().collect();
    hetero_cols.sort_unstable_by_key(|h| h.column);
    for h in hetero_cols {
        let x = h.column;
        for y in 1..=gh {
            let source = push_meta(pin_meta(NodeKind::Source, x, y, 0, h.outputs), &mut metas);
            let sink = push_meta(pin_meta(NodeKind::Sink, x, y, 0, h.inputs), &mut metas);
            let opins: Vec<u32> = (0..h.outputs)
                .map(|ptc| push_meta(pin_meta(NodeKind::Opin, x, y, ptc as u32, 1), &mut metas))
                .collect();
            let ipins: Vec<u32> = (0..h.inputs)
                .map(|ptc| push_meta(pin_meta(NodeKind::Ipin, x, y, ptc as u32, 1), &mut metas))
                .collect();
            blocks[y as usize][x as usize] = Some(Block {
                source,
                sink,
                opins,
                ipins,
            });
        }
    }

    let mut adjacency: Vec<Vec<(u32, u16)>> = vec![Vec::new(); metas.len()];
    let k_in = fc_count(p.fc_in, p.channel_width);
    let k_out = fc_count(p.fc_out, p.channel_width);

    // Pin ↔ wire connections for one block. Logic pins alternate between
    // the horizontal channels below/above the tile and the vertical
    // channels left/right of it, tapping lanes position-independently so
    // tile patterns stay shifted copies. I/O pads face their single
    // channel at full connectivity, the usual convention for perimeter
    // pads: a pad has one input pin, and anything less than the full lane
    // set turns nearby border wires into unavoidable shared resources on
    // a disjoint fabric, where a route can never change lanes.
    let connect_block = |block: &Block,
                         x: u16,
                         y: u16,
                         io_channel: Option<(bool, usize, u16)>,
                         adjacency: &mut Vec<Vec<(u32, u16)>>| {
        for &opin in &block.opins {
            adjacency[block.source as usize].push((opin, SW_PASS));
        }
        for &ipin in &block.ipins {
            adjacency[ipin as usize].push((block.sink, SW_PASS));
        }
        let pin_targets = |ptc: u16, k: usize| -> Vec<u32> {
            let channels: Vec<(bool, usize, u16)> = match io_channel {
                Some(ch) => vec![ch],
                None => {
                    if ptc.is_multiple_of(2) {
                        vec![(true, (y - 1) as usize, x), (true, y as usize, x)]
                    } else {
                        vec![(false, (x - 1) as usize, y), (false, x as usize, y)]
                    }
                }
            };
            let k = if io_channel.is_some() { w } else { k };
            let mut targets = Vec::with_capacity(k * 2);
            for &(is_x, channel, pos) in &channels {
                let set = if is_x { &chanx } else { &chany };
                for j in 0..k {
                    let lane = if io_channel.is_some() {
                        j
                    } else {
                        pin_lane(ptc, j, w, k)
                    };
                    if let Some(seg) = set.covering(channel, lane, pos) {
                        targets.push(seg.node);
                    }
                }
            }
            targets
        };
        for (ptc, &opin) in block.opins.iter().enumerate() {
            for wire in pin_targets(ptc as u16, k_out) {
                adjacency[opin as usize].push((wire, SW_DRIVER));
            }
        }
        for (ptc, &ipin) in block.ipins.iter().enumerate() {
            for wire in pin_targets(ptc as u16, k_in) {
                adjacency[wire as usize].push((ipin, SW_INPUT_MUX));
            }
        }
    };

    for y in 0..=gh + 1 {
        for x in 0..=gw + 1 {
            if let Some(block) = &blocks[y as usize][x as usize] {
                connect_block(block, x, y, None, &mut adjacency);
            }
            let io_channel = if y == 0 {
                Some((true, 0usize, x))
            } else if y == gh + 1 {
                Some((true, gh as usize, x))
            } else if x == 0 {
                Some((false, 0usize, y))
            } else if x == gw + 1 {
                Some((false, gw as usize, y))
            } else {
                None
            };
            for pad in &io_pads[y as usize][x as usize] {
                connect_block(pad, x, y, io_channel, &mut adjacency);
            }
        }
    }

    // Switch blocks: at every junction (jx, jy), the crossing of CHANX row
    // jy with CHANY column jx, wires that terminate there connect to the
    // same-junction wires of the other directions, and wires passing the
    // junction cross-connect on the same lane (fully populated internal
    // switch points, as segmented bidirectional fabrics do).
    let connect = |u: u32, v: u32, adjacency: &mut Vec<Vec<(u32, u16)>>| {
        adjacency[u as usize].push((v, SW_SB));
        adjacency[v as usize].push((u, SW_SB));
    };
    for jy in 0..=gh {
        for jx in 0..=gw {
            for t in 0..w {
                let a = chanx.ending_at(jy as usize, t, jx).map(|s| s.node);
                let b = if jx < gw {
                    chanx.starting_at(jy as usize, t, jx + 1).map(|s| s.node)
                } else {
                    None
                };
                let px = chanx.passing(jy as usize, t, jx).map(|s| s.node);
                let y_seg = |lane: usize, which: u8| -> Option<u32> {
                    match which {
                        0 => chany.ending_at(jx as usize, lane, jy).map(|s| s.node),
                        1 if jy < gh => {
                            chany.starting_at(jx as usize, lane, jy + 1).map(|s| s.node)
                        }
                        2 => chany.passing(jx as usize, lane, jy).map(|s| s.node),
                        _ => None,
                    }
                };

                if let (Some(a), Some(b)) = (a, b) {
                    connect(a, b, &mut adjacency);
                }
                if let (Some(c), Some(d)) = (y_seg(t, 0), y_seg(t, 1)) {
                    connect(c, d, &mut adjacency);
                }
                if let Some(a) = a {
                    for (corner, which) in [(1u8, 0u8), (0, 1), (4, 2)] {
                        if let Some(v) = y_seg(turn_lane(p.switch_block, t, w, corner), which) {
                            connect(a, v, &mut adjacency);
                        }
                    }
                }
                if let Some(b) = b {
                    for (corner, which) in [(2u8, 0u8), (3, 1), (4, 2)] {
                        if let Some(v) = y_seg(turn_lane(p.switch_block, t, w, corner), which) {
                            connect(b, v, &mut adjacency);
                        }
                    }
                }
                if let Some(px) = px {
                    for which in [0u8, 1, 2] {
                        if let Some(v) = y_seg(t, which) {
                            connect(px, v, &mut adjacency);
                        }
                    }
                }
            }
        }
    }

    let mut graph = RawGraph {
        metas,
        adjacency,
        num_switch_types: NUM_SWITCH_TYPES,
    };
    graph.canonicalize();
    debug_assert!(graph.validate().is_ok());
    Ok(graph)
}

/// One signal net: a source terminal and its fanout sinks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub source: u32,
    pub sinks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Netlist {
    pub nets: Vec<Net>,
}

/// (source, sink) node pair of every block in the graph, in id order.
/// Blocks are recovered from the metadata: the SOURCE and SINK of one block
/// share a tile and a ptc.
pub fn block_terminals(g: &RawGraph) -> Vec<(u32, u32)> {
    let mut sinks: HashMap<(u16, u16, u32), u32> = HashMap::new();
    for (id, meta) in g.metas.iter().enumerate() {
        if meta.kind == NodeKind::Sink {
            sinks.insert((meta.xlow, meta.ylow, meta.ptc), id as u32);
        }
    }
    let mut out = Vec::new();
    for (id, meta) in g.metas.iter().enumerate() {
        if meta.kind == NodeKind::Source {
            if let Some(&sink) = sinks.get(&(meta.xlow, meta.ylow, meta.ptc)) {
                out.push((id as u32, sink));
            }
        }
    }
    out
}

/// Seeded synthetic netlist: `n_nets` distinct source blocks, each fanning
/// out to 1..=`max_fanout` distinct sink blocks (never its own block).
/// Sink choices respect each block's sink capacity so the instance is not
/// structurally illegal before routing starts.
pub fn generate_nets(
    g: &RawGraph,
    p: &ArchParams,
    n_nets: usize,
    max_fanout: usize,
) -> Result<Netlist> {
    let blocks = block_terminals(g);
    if n_nets == 0 {
        return Err(Error::Param {
            reason: "need at least one net".into(),
        });
    }
    if n_nets > blocks.len() {
        return Err(Error::Param {
            reason: format!(
                "{n_nets} nets requested but only {} source blocks exist",
                blocks.len()
            ),
        });
    }
    if max_fanout == 0 || max_fanout > blocks.len() - 1 {
        return Err(Error::Param {
            reason: format!(
                "max_fanout must be in 1..={}, got {max_fanout}",
                blocks.len() - 1
            ),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    // Partial Fisher-Yates: the first n_nets slots become the net sources.
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    for i in 0..n_nets {
        let j = rng.gen_range(i..order.len());
        order.swap(i, j);
    }

    let mut sink_room: Vec<u32> = blocks
        .iter()
        .map(|&(_, sink)| g.metas[sink as usize].capacity as u32)
        .collect();
    let mut nets = Vec::with_capacity(n_nets);
    for (i, &src_block) in order[..n_nets].iter().enumerate() {
        let fanout = rng.gen_range(1..=max_fanout);
        let mut chosen: Vec<usize> = Vec::with_capacity(fanout);
        let mut attempts = 0usize;
        while chosen.len() < fanout {
            let cand = rng.gen_range(0..blocks.len());
            attempts += 1;
            if attempts > blocks.len() * 64 {
                return Err(Error::Param {
                    reason: "netlist demand exceeds available sink capacity".into(),
                });
            }
            if cand != src_block && !chosen.contains(&cand) && sink_room[cand] > 0 {
                chosen.push(cand);
            }
        }
        for &b in &chosen {
            sink_room[b] -= 1;
        }
        nets.push(Net {
            name: format!("n{i}"),
            source: blocks[src_block].0,
            sinks: chosen.iter().map(|&b| blocks[b].1).collect(),
        });
    }
    Ok(Netlist { nets })
}

impl Netlist {
    /// Text form, one line per net: `net <name> <source_id> <sink_id>...`.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        for net in &self.nets {
            write!(w, "net {} {}", net.name, net.source)?;
            for sink in &net.sinks {
                write!(w, " {sink}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Netlist> {
        let mut nets = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let bad = |what: &str| Error::Format {
                reason: format!("netlist line {}: {what}", lineno + 1),
            };
            if tokens.next() != Some("net") {
                return Err(bad("expected the line to start with `net`"));
            }
            let name = tokens
                .next()
                .ok_or_else(|| bad("missing net name"))?
                .to_string();
            let source: u32 = tokens
                .next()
                .ok_or_else(|| bad("missing source id"))?
                .parse()
                .map_err(|_| bad("source id is not an integer"))?;
            let sinks: Vec<u32> = tokens
                .map(|t| t.parse().map_err(|_| bad("sink id is not an integer")))
                .collect::<Result<_>>()?;
            if sinks.is_empty() {
                return Err(bad("net has no sinks"));
            }
            nets.push(Net {
                name,
                source,
                sinks,
            });
        }
        Ok(Netlist { nets })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_text(&mut w)
    }

    pub fn open<P: AsRef<Path>>(path: P) -> Result<Netlist> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_text(&mut r)
    }
}

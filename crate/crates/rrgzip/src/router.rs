//! Negotiated-congestion detailed router.
//!
//! Classic rip-up-and-reroute: every net is routed by lowest-cost search
//! from its growing route tree to each remaining sink; after each pass,
//! nodes used beyond capacity get more expensive (a growing present-cost
//! factor and an accumulating history cost) until every net fits or the
//! iteration budget runs out.
//!
//! The router never looks at adjacency storage directly: neighbor
//! expansion goes through an [`AdjacencyProvider`], either the flat
//! in-memory lists or the compressed pool decoded on the fly into reusable
//! scratch buffers. Both providers return identical lists, and every tie in
//! the search is broken by (cost, node id), so routing results are
//! bit-identical across providers; only the wall time differs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::archgen::Netlist;
use crate::graphstore::{CompressedRRG, NodeKind, RRNodeMeta, RawGraph};
use crate::{Error, Result};

/// Neighbor expansion abstracted over the adjacency storage form.
pub trait AdjacencyProvider {
    fn num_nodes(&self) -> usize;
    fn meta(&self, node: u32) -> &RRNodeMeta;
    /// Fill caller-owned scratch with the node's targets and switch ids, in
    /// canonical (target, switch) order.
    fn expand(&self, node: u32, out_edges: &mut Vec<u32>, out_switches: &mut Vec<u16>);
    fn name(&self) -> &'static str;
}

/// Reads stored adjacency lists directly. The graph must be in canonical
/// order (as produced by the generator or [`RawGraph::canonicalize`]).
pub struct FlatProvider<'a> {
    graph: &'a RawGraph,
}

impl<'a> FlatProvider<'a> {
    pub fn new(graph: &'a RawGraph) -> Self {
        debug_assert!(
            graph
                .adjacency
                .iter()
                .all(|l| l.windows(2).all(|w| w[0] <= w[1])),
            "flat provider requires canonical adjacency order"
        );
        FlatProvider { graph }
    }
}

impl AdjacencyProvider for FlatProvider<'_> {
    fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn meta(&self, node: u32) -> &RRNodeMeta {
        &self.graph.metas[node as usize]
    }

    fn expand(&self, node: u32, out_edges: &mut Vec<u32>, out_switches: &mut Vec<u16>) {
        out_edges.clear();
        out_switches.clear();
        for &(target, switch) in &self.graph.adjacency[node as usize] {
            out_edges.push(target);
            out_switches.push(switch);
        }
    }

    fn name(&self) -> &'static str {
        "flat"
    }
}

/// Decompresses adjacency entries on every expansion.
pub struct CompressedProvider<'a> {
    graph: &'a CompressedRRG,
}

impl<'a> CompressedProvider<'a> {
    pub fn new(graph: &'a CompressedRRG) -> Self {
        CompressedProvider { graph }
    }
}

impl AdjacencyProvider for CompressedProvider<'_> {
    fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn meta(&self, node: u32) -> &RRNodeMeta {
        self.graph.meta(node)
    }

    fn expand(&self, node: u32, out_edges: &mut Vec<u32>, out_switches: &mut Vec<u16>) {
        self.graph.neighbors(node, out_edges, out_switches);
    }

    fn name(&self) -> &'static str {
        "compressed"
    }
}

/// Cost schedule and search knobs. The congestion formula per node is
/// `(base + history) * (1 + p_fac * max(0, occupancy + 1 - capacity))`;
/// `p_fac` multiplies by `p_fac_mult` after every iteration and overused
/// nodes accumulate `h_fac * overuse` history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterParams {
    pub p_fac_init: f64,
    pub p_fac_mult: f64,
    pub h_fac: f64,
    pub max_iterations: u32,
    pub astar_enabled: bool,
    pub astar_weight: f64,
}

impl Default for RouterParams {
    fn default() -> Self {
        RouterParams {
            p_fac_init: 0.5,
            p_fac_mult: 1.8,
            h_fac: 1.0,
            max_iterations: 50,
            astar_enabled: true,
            astar_weight: 1.0,
        }
    }
}

impl RouterParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_fac_mult.is_nan() || self.p_fac_mult <= 1.0 {
            return Err(Error::Param {
                reason: format!("p_fac_mult must exceed 1, got {}", self.p_fac_mult),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::Param {
                reason: "max_iterations must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One tree edge: `node` is reached from `parent` through `switch`. The
/// root carries itself as parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RouteEdge {
    pub node: u32,
    pub parent: u32,
    pub switch: u16,
}

/// A routed net: a tree rooted at the source covering every sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetRoute {
    pub name: String,
    pub edges: Vec<RouteEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingResult {
    pub routes: Vec<NetRoute>,
    pub iterations: u32,
    pub legal: bool,
    pub wall_ms: f64,
    pub nodes_expanded: u64,
}

impl RoutingResult {
    /// Everything the determinism contract covers (trees, iteration count,
    /// and search effort); wall time is excluded.
    pub fn deterministic_parts(&self) -> (&[NetRoute], u32, bool, u64) {
        (
            &self.routes,
            self.iterations,
            self.legal,
            self.nodes_expanded,
        )
    }
}

/// Stable digest of the route trees, for cheap equivalence checks across
/// providers and runs.
pub fn route_tree_digest(result: &RoutingResult) -> String {
    let mut hasher = Sha256::new();
    for route in &result.routes {
        hasher.update(route.name.as_bytes());
        hasher.update([0u8]);
        for e in &route.edges {
            hasher.update(e.node.to_le_bytes());
            hasher.update(e.parent.to_le_bytes());
            hasher.update(e.switch.to_le_bytes());
        }
        hasher.update([0xffu8]);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn base_cost(kind: NodeKind) -> f64 {
    match kind {
        // Slightly cheaper input pins pull searches into connection blocks.
        NodeKind::Ipin => 0.95,
        _ => 1.0,
    }
}

const MIN_BASE_COST: f64 = 0.95;

fn manhattan(a: &RRNodeMeta, b: &RRNodeMeta) -> f64 {
    let dx = (b.xlow.saturating_sub(a.xhigh)).max(a.xlow.saturating_sub(b.xhigh));
    let dy = (b.ylow.saturating_sub(a.yhigh)).max(a.ylow.saturating_sub(b.yhigh));
    (dx + dy) as f64
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    priority: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed so the max-heap pops the lowest (priority, node id) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.node.cmp(&self.node))
    }
}

struct SearchState {
    path_cost: Vec<f64>,
    prev: Vec<(u32, u16)>,
    visit_epoch: Vec<u32>,
    tree_epoch: Vec<u32>,
    epoch: u32,
    tree_stamp: u32,
    heap: BinaryHeap<HeapEntry>,
    scratch_edges: Vec<u32>,
    scratch_switches: Vec<u16>,
}

impl SearchState {
    fn new(n: usize) -> Self {
        SearchState {
            path_cost: vec![0.0; n],
            prev: vec![(0, 0); n],
            visit_epoch: vec![0; n],
            tree_epoch: vec![0; n],
            epoch: 0,
            tree_stamp: 0,
            heap: BinaryHeap::new(),
            scratch_edges: Vec::new(),
            scratch_switches: Vec::new(),
        }
    }
}

/// Route every net. Deterministic for identical inputs: nets are processed
/// in list order, sinks in listed order, and search ties resolve by
/// (cost, node id).
pub fn route<P: AdjacencyProvider>(
    provider: &P,
    nets: &Netlist,
    params: &RouterParams,
) -> Result<RoutingResult> {
    params.validate()?;
    let started = Instant::now();
    let n = provider.num_nodes();
    for net in &nets.nets {
        for &terminal in std::iter::once(&net.source).chain(&net.sinks) {
            if terminal as usize >= n {
                return Err(Error::Param {
                    reason: format!(
                        "net {} references node {terminal} outside the graph",
                        net.name
                    ),
                });
            }
        }
    }

    let mut occupancy = vec![0u32; n];
    let mut history = vec![0.0f64; n];
    let mut trees: Vec<Option<(Vec<u32>, Vec<RouteEdge>)>> = vec![None; nets.nets.len()];
    let mut state = SearchState::new(n);
    let mut p_fac = params.p_fac_init;
    let mut nodes_expanded = 0u64;
    let mut iterations = 0u32;
    let mut legal = false;

    for iteration in 1..=params.max_iterations {
        iterations = iteration;
        for (net_idx, net) in nets.nets.iter().enumerate() {
            if let Some((nodes, _)) = trees[net_idx].take() {
                for node in nodes {
                    occupancy[node as usize] -= 1;
                }
            }
            let (tree_nodes, edges) = route_net(
                provider,
                net,
                params,
                p_fac,
                &occupancy,
                &history,
                &mut state,
                &mut nodes_expanded,
            )?;
            for &node in &tree_nodes {
                occupancy[node as usize] += 1;
            }
            trees[net_idx] = Some((tree_nodes, edges));
        }

        let mut any_overuse = false;
        for node in 0..n {
            let over = occupancy[node].saturating_sub(provider.meta(node as u32).capacity as u32);
            if over > 0 {
                any_overuse = true;
                history[node] += params.h_fac * over as f64;
            }
        }
        if !any_overuse {
            legal = true;
            break;
        }
        p_fac *= params.p_fac_mult;
    }

    let routes = nets
        .nets
        .iter()
        .zip(&trees)
        .map(|(net, tree)| {
            let (_, edges) = tree.as_ref().expect("routed");
            let mut edges = edges.clone();
            edges.sort_unstable();
            NetRoute {
                name: net.name.clone(),
                edges,
            }
        })
        .collect();

    Ok(RoutingResult {
        routes,
        iterations,
        legal,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        nodes_expanded,
    })
}

#[allow(clippy::too_many_arguments)]
fn route_net<P: AdjacencyProvider>(
    provider: &P,
    net: &crate::archgen::Net,
    params: &RouterParams,
    p_fac: f64,
    occupancy: &[u32],
    history: &[f64],
    state: &mut SearchState,
    nodes_expanded: &mut u64,
) -> Result<(Vec<u32>, Vec<RouteEdge>)> {
    state.tree_stamp += 1;
    let stamp = state.tree_stamp;
    let mut tree_nodes = vec![net.source];
    let mut edges = vec![RouteEdge {
        node: net.source,
        parent: net.source,
        switch: 0,
    }];
    state.tree_epoch[net.source as usize] = stamp;

    let node_cost = |node: u32| -> f64 {
        let meta = provider.meta(node);
        let over = (occupancy[node as usize] + 1).saturating_sub(meta.capacity as u32);
        (base_cost(meta.kind) + history[node as usize]) * (1.0 + p_fac * over as f64)
    };

    for &sink in &net.sinks {
        let sink_meta = *provider.meta(sink);
        let estimate = |node: u32| -> f64 {
            if params.astar_enabled {
                manhattan(provider.meta(node), &sink_meta) * MIN_BASE_COST * params.astar_weight
            } else {
                0.0
            }
        };

        state.epoch += 1;
        let epoch = state.epoch;
        state.heap.clear();
        for &tn in &tree_nodes {
            state.path_cost[tn as usize] = 0.0;
            state.visit_epoch[tn as usize] = epoch;
            state.heap.push(HeapEntry {
                priority: estimate(tn),
                node: tn,
            });
        }

        let mut found = false;
        while let Some(HeapEntry { priority, node }) = state.heap.pop() {
            // Stale entries: the node was re-relaxed cheaper after this
            // push; the fresher entry is still queued.
            if priority != state.path_cost[node as usize] + estimate(node) {
                continue;
            }
            *nodes_expanded += 1;
            if node == sink {
                found = true;
                break;
            }
            provider.expand(node, &mut state.scratch_edges, &mut state.scratch_switches);
            let g = state.path_cost[node as usize];
            for (&target, &switch) in state.scratch_edges.iter().zip(&state.scratch_switches) {
                let kind = provider.meta(target).kind;
                // Foreign sinks are dead ends; sources are never re-entered.
                if (kind == NodeKind::Sink && target != sink) || kind == NodeKind::Source {
                    continue;
                }
                let g_next = g + node_cost(target);
                if state.visit_epoch[target as usize] != epoch
                    || g_next < state.path_cost[target as usize]
                {
                    state.visit_epoch[target as usize] = epoch;
                    state.path_cost[target as usize] = g_next;
                    state.prev[target as usize] = (node, switch);
                    state.heap.push(HeapEntry {
                        priority: g_next + estimate(target),
                        node: target,
                    });
                }
            }
        }
        if !found {
            return Err(Error::Unroutable {
                net: net.name.clone(),
                sink,
            });
        }

        // Walk back to the existing tree, then graft the path on.
        let mut path = Vec::new();
        let mut cursor = sink;
        while state.tree_epoch[cursor as usize] != stamp {
            let (parent, switch) = state.prev[cursor as usize];
            path.push(RouteEdge {
                node: cursor,
                parent,
                switch,
            });
            cursor = parent;
        }
        for edge in path.into_iter().rev() {
            state.tree_epoch[edge.node as usize] = stamp;
            tree_nodes.push(edge.node);
            edges.push(edge);
        }
    }
    Ok((tree_nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archgen::Net;
    use crate::graphstore::RawGraph;

    fn meta(kind: NodeKind, capacity: u16) -> RRNodeMeta {
        RRNodeMeta {
            kind,
            xlow: 0,
            ylow: 0,
            xhigh: 0,
            yhigh: 0,
            ptc: 0,
            capacity,
        }
    }

    /// Two nets contending for a capacity-1 wire. Net `a` has no choice;
    /// net `c` prefers the shared wire but has a longer detour through two
    /// other wires.
    ///
    /// ```text
    /// 0 SRC_a → 1 OPIN → 4 T1(cap 1) → 7 IPIN → 8 SINK_b
    /// 2 SRC_c → 3 OPIN → 4 T1        → 9 IPIN → 10 SINK_d
    ///                  ↘ 5 T2 → 6 T3 ↗
    /// ```
    fn conflict_graph() -> (RawGraph, Netlist) {
        use NodeKind::*;
        let metas = vec![
            meta(Source, 1),
            meta(Opin, 1),
            meta(Source, 1),
            meta(Opin, 1),
            meta(Chanx, 1),
            meta(Chanx, 1),
            meta(Chanx, 1),
            meta(Ipin, 1),
            meta(Sink, 1),
            meta(Ipin, 1),
            meta(Sink, 1),
        ];
        let mut adjacency = vec![Vec::new(); metas.len()];
        for (s, t) in [
            (0, 1),
            (1, 4),
            (4, 7),
            (7, 8),
            (2, 3),
            (3, 4),
            (3, 5),
            (4, 9),
            (5, 6),
            (6, 9),
            (9, 10),
        ] {
            adjacency[s as usize].push((t as u32, 0u16));
        }
        let graph = RawGraph {
            metas,
            adjacency,
            num_switch_types: 1,
        };
        let nets = Netlist {
            nets: vec![
                Net {
                    name: "a".into(),
                    source: 0,
                    sinks: vec![8],
                },
                Net {
                    name: "c".into(),
                    source: 2,
                    sinks: vec![10],
                },
            ],
        };
        (graph, nets)
    }

    fn occupancy_of(result: &RoutingResult, n: usize) -> Vec<u32> {
        let mut occ = vec![0u32; n];
        for route in &result.routes {
            for e in &route.edges {
                occ[e.node as usize] += 1;
            }
        }
        occ
    }

    #[test]
    fn congestion_negotiation_resolves_the_conflict() {
        let (graph, nets) = conflict_graph();
        let provider = FlatProvider::new(&graph);
        let result = route(&provider, &nets, &RouterParams::default()).unwrap();
        assert!(result.legal);
        assert!(
            result.iterations > 1,
            "both nets want the shared wire first, so one must be renegotiated"
        );
        let occ = occupancy_of(&result, graph.num_nodes());
        assert_eq!(occ.iter().max(), Some(&1));
        // Net a keeps the only path it has.
        let a = &result.routes[0];
        let mut a_nodes: Vec<u32> = a.edges.iter().map(|e| e.node).collect();
        a_nodes.sort_unstable();
        assert_eq!(a_nodes, [0, 1, 4, 7, 8]);
        // Net c ends up on the detour.
        let c = &result.routes[1];
        assert!(c.edges.iter().any(|e| e.node == 5));
        assert!(!c.edges.iter().any(|e| e.node == 4));
    }

    #[test]
    fn unreachable_sink_names_the_net() {
        let (mut graph, _) = conflict_graph();
        graph.metas.push(meta(NodeKind::Sink, 1));
        graph.adjacency.push(Vec::new());
        let nets = Netlist {
            nets: vec![Net {
                name: "stranded".into(),
                source: 0,
                sinks: vec![11],
            }],
        };
        let provider = FlatProvider::new(&graph);
        match route(&provider, &nets, &RouterParams::default()) {
            Err(Error::Unroutable { net, sink }) => {
                assert_eq!(net, "stranded");
                assert_eq!(sink, 11);
            }
            other => panic!("expected an unroutable error, got {other:?}"),
        }
    }

    #[test]
    fn routing_is_deterministic() {
        let (graph, nets) = conflict_graph();
        let provider = FlatProvider::new(&graph);
        let a = route(&provider, &nets, &RouterParams::default()).unwrap();
        let b = route(&provider, &nets, &RouterParams::default()).unwrap();
        assert_eq!(a.deterministic_parts(), b.deterministic_parts());
        assert_eq!(route_tree_digest(&a), route_tree_digest(&b));
    }

    #[test]
    fn iteration_budget_reports_illegal_result() {
        let (graph, nets) = conflict_graph();
        let provider = FlatProvider::new(&graph);
        let params = RouterParams {
            max_iterations: 1,
            ..Default::default()
        };
        let result = route(&provider, &nets, &params).unwrap();
        assert!(!result.legal);
        assert_eq!(result.iterations, 1);
        let occ = occupancy_of(&result, graph.num_nodes());
        assert_eq!(occ[4], 2, "both nets crowd the shared wire in one pass");
    }

    #[test]
    fn invalid_params_rejected() {
        let (graph, nets) = conflict_graph();
        let provider = FlatProvider::new(&graph);
        let params = RouterParams {
            p_fac_mult: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            route(&provider, &nets, &params),
            Err(Error::Param { .. })
        ));
    }

    #[test]
    fn foreign_terminal_rejected() {
        let (graph, _) = conflict_graph();
        let provider = FlatProvider::new(&graph);
        let nets = Netlist {
            nets: vec![Net {
                name: "oob".into(),
                source: 0,
                sinks: vec![99],
            }],
        };
        assert!(matches!(
            route(&provider, &nets, &RouterParams::default()),
            Err(Error::Param { .. })
        ));
    }
}

//! Reverse Cuthill–McKee renumbering and bandwidth diagnostics.
//!
//! Gap encoding benefits when connected nodes carry nearby ids; viewed as a
//! sparse matrix, that means adjacency entries clustered around the
//! diagonal. RCM relabels nodes to shrink the matrix bandwidth, which can
//! shrink gap magnitudes, at the cost of potentially scattering the
//! repeated tile patterns the dedup window feeds on. The ordering runs on
//! the symmetrized graph; the stored graph stays directed.

use crate::graphstore::RawGraph;
use crate::{Error, Result};

/// A node relabeling with both directions materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<u32> = (0..n as u32).collect();
        Permutation {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Build from a forward map (old id → new id). Must be a bijection.
    pub fn from_forward(forward: Vec<u32>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![u32::MAX; n];
        for (old, &new) in forward.iter().enumerate() {
            if new as usize >= n || inverse[new as usize] != u32::MAX {
                return Err(Error::InvalidGraph {
                    reason: format!("forward map is not a bijection at old id {old}"),
                });
            }
            inverse[new as usize] = old as u32;
        }
        Ok(Permutation { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Old id → new id.
    pub fn forward(&self, old: u32) -> u32 {
        self.forward[old as usize]
    }

    /// New id → old id.
    pub fn inverse(&self, new: u32) -> u32 {
        self.inverse[new as usize]
    }
}

/// Undirected neighbor lists (sorted, deduplicated, self-loops dropped).
fn symmetrize(raw: &RawGraph) -> Vec<Vec<u32>> {
    let n = raw.num_nodes();
    let mut adj = vec![Vec::new(); n];
    for (source, list) in raw.adjacency.iter().enumerate() {
        for &(target, _) in list {
            if target as usize != source {
                adj[source].push(target);
                adj[target as usize].push(source as u32);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// BFS from `start` over unordered neighbors; returns (eccentricity, last
/// level). Only nodes of `start`'s component are touched.
fn bfs_levels(adj: &[Vec<u32>], start: u32) -> (usize, Vec<u32>) {
    let mut seen = vec![false; adj.len()];
    let mut frontier = vec![start];
    seen[start as usize] = true;
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &n in &frontier {
            for &nb in &adj[n as usize] {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    next.push(nb);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

/// Pseudo-peripheral start node: repeatedly jump to the lowest-degree node
/// of the farthest BFS level while the eccentricity keeps growing. Ties go
/// to the smallest id.
fn pseudo_peripheral(adj: &[Vec<u32>], seed: u32) -> u32 {
    let mut current = seed;
    let (mut ecc, mut last_level) = bfs_levels(adj, current);
    loop {
        let candidate = last_level
            .iter()
            .copied()
            .min_by_key(|&n| (adj[n as usize].len(), n))
            .expect("level nonempty");
        let (cand_ecc, cand_level) = bfs_levels(adj, candidate);
        if cand_ecc > ecc {
            current = candidate;
            ecc = cand_ecc;
            last_level = cand_level;
        } else {
            return current;
        }
    }
}

/// Reverse Cuthill–McKee order over the symmetrized adjacency. Each
/// component starts from a pseudo-peripheral node (components are seeded in
/// ascending id order), neighbors are visited in ascending
/// (degree, id) order, and the concatenated visit order is reversed.
pub fn rcm_order(raw: &RawGraph) -> Permutation {
    let n = raw.num_nodes();
    let adj = symmetrize(raw);
    let mut visited = vec![false; n];
    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut neighbor_buf: Vec<u32> = Vec::new();

    for seed in 0..n as u32 {
        if visited[seed as usize] {
            continue;
        }
        let start = pseudo_peripheral(&adj, seed);
        visited[start as usize] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let node = order[head];
            head += 1;
            neighbor_buf.clear();
            neighbor_buf.extend(
                adj[node as usize]
                    .iter()
                    .copied()
                    .filter(|&nb| !visited[nb as usize]),
            );
            neighbor_buf.sort_unstable_by_key(|&nb| (adj[nb as usize].len(), nb));
            for &nb in &neighbor_buf {
                visited[nb as usize] = true;
                order.push(nb);
            }
        }
    }

    order.reverse();
    let mut forward = vec![0u32; n];
    for (new, &old) in order.iter().enumerate() {
        forward[old as usize] = new as u32;
    }
    Permutation::from_forward(forward).expect("visit order is a bijection")
}

/// Relabel a graph: metadata moves with its node, targets are rewritten,
/// and every list is re-canonicalized. The result is isomorphic to the
/// input under `p`.
pub fn apply_permutation(raw: &RawGraph, p: &Permutation) -> Result<RawGraph> {
    if p.len() != raw.num_nodes() {
        return Err(Error::PermutationSizeMismatch {
            permutation: p.len(),
            graph: raw.num_nodes(),
        });
    }
    let n = raw.num_nodes();
    let mut metas = vec![raw.metas.first().copied().unwrap_or(placeholder_meta()); n];
    let mut adjacency = vec![Vec::new(); n];
    for old in 0..n {
        let new = p.forward(old as u32) as usize;
        metas[new] = raw.metas[old];
        let mut list: Vec<(u32, u16)> = raw.adjacency[old]
            .iter()
            .map(|&(target, switch)| (p.forward(target), switch))
            .collect();
        list.sort_unstable();
        adjacency[new] = list;
    }
    Ok(RawGraph {
        metas,
        adjacency,
        num_switch_types: raw.num_switch_types,
    })
}

fn placeholder_meta() -> crate::graphstore::RRNodeMeta {
    crate::graphstore::RRNodeMeta {
        kind: crate::graphstore::NodeKind::Source,
        xlow: 0,
        ylow: 0,
        xhigh: 0,
        yhigh: 0,
        ptc: 0,
        capacity: 1,
    }
}

/// Matrix bandwidth of the (symmetrized) adjacency: the largest |target −
/// source| over all edges; 0 for edgeless graphs.
pub fn bandwidth(raw: &RawGraph) -> u64 {
    let mut bw = 0u64;
    for (source, list) in raw.adjacency.iter().enumerate() {
        for &(target, _) in list {
            bw = bw.max((target as i64 - source as i64).unsigned_abs());
        }
    }
    bw
}

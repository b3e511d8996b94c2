//! Static shortest-path routing.
//!
//! Paths minimise hop count; among equal-length paths the one whose node-id
//! sequence is lexicographically smallest wins. Only switches forward, so
//! hosts appear on a path only as its endpoints. Among parallel links the
//! first declared is used.

use std::collections::VecDeque;

use thiserror::Error;

use crate::model::{ExperimentSpec, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("disconnected topology: no route for {}", fmt_pairs(.pairs))]
pub struct DisconnectedError {
    pub pairs: Vec<(String, String)>,
}

fn fmt_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("{a}->{b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One link traversal: link index and direction (0 = source to target).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub link: usize,
    pub dir: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct RoutingTable {
    n: usize,
    /// `next[src * n + dst]`: first hop from `src` toward `dst`.
    next: Vec<Option<Hop>>,
    ids: Vec<String>,
}

const UNREACHED: u32 = u32::MAX;

impl RoutingTable {
    /// Build the table without checking connectivity.
    pub fn build(spec: &ExperimentSpec) -> Self {
        let n = spec.nodes.len();
        let index = |id: &str| spec.nodes.iter().position(|x| x.id == id).expect("validated endpoint");
        let forwards: Vec<bool> = spec.nodes.iter().map(|x| x.kind == NodeKind::Switch).collect();

        // adjacency[u] = (neighbor, hop) sorted by neighbor id, first declared link per neighbor
        let mut adjacency: Vec<Vec<Hop>> = vec![Vec::new(); n];
        for (li, l) in spec.links.iter().enumerate() {
            let (a, b) = (index(&l.source), index(&l.target));
            for (u, v, dir) in [(a, b, 0), (b, a, 1)] {
                if !adjacency[u].iter().any(|h| h.to == v) {
                    adjacency[u].push(Hop { link: li, dir, to: v });
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_by(|x, y| spec.nodes[x.to].id.cmp(&spec.nodes[y.to].id));
        }

        let mut next = vec![None; n * n];
        let mut dist = vec![UNREACHED; n];
        let mut queue = VecDeque::new();
        for dst in 0..n {
            dist.fill(UNREACHED);
            dist[dst] = 0;
            queue.clear();
            queue.push_back(dst);
            while let Some(v) = queue.pop_front() {
                // Paths may only pass through `v` if it forwards.
                if v != dst && !forwards[v] {
                    continue;
                }
                for h in &adjacency[v] {
                    if dist[h.to] == UNREACHED {
                        dist[h.to] = dist[v] + 1;
                        queue.push_back(h.to);
                    }
                }
            }
            for src in 0..n {
                if src == dst || dist[src] == UNREACHED {
                    continue;
                }
                // Smallest-id neighbour one step closer; adjacency is id-sorted.
                next[src * n + dst] = adjacency[src]
                    .iter()
                    .find(|h| {
                        dist[h.to] != UNREACHED
                            && dist[h.to] + 1 == dist[src]
                            && (h.to == dst || forwards[h.to])
                    })
                    .copied();
            }
        }
        RoutingTable {
            n,
            next,
            ids: spec.nodes.iter().map(|x| x.id.clone()).collect(),
        }
    }

    /// Build the table and require a route between every pair of hosts
    /// that carry components.
    pub fn compute(spec: &ExperimentSpec) -> Result<Self, DisconnectedError> {
        let table = Self::build(spec);
        let active: Vec<usize> = (0..table.n)
            .filter(|&i| spec.nodes[i].kind == NodeKind::Host && spec.nodes[i].has_components())
            .collect();
        let mut pairs = Vec::new();
        for &a in &active {
            for &b in &active {
                if a != b && table.next_hop(a, b).is_none() {
                    pairs.push((table.ids[a].clone(), table.ids[b].clone()));
                }
            }
        }
        if pairs.is_empty() {
            Ok(table)
        } else {
            Err(DisconnectedError { pairs })
        }
    }

    pub fn next_hop(&self, from: usize, to: usize) -> Option<Hop> {
        self.next[from * self.n + to]
    }

    /// Full hop list from `src` to `dst`; empty when equal, `None` when unreachable.
    pub fn route(&self, src: usize, dst: usize) -> Option<Vec<Hop>> {
        let mut hops = Vec::new();
        let mut at = src;
        while at != dst {
            let h = self.next_hop(at, dst)?;
            hops.push(h);
            at = h.to;
        }
        Some(hops)
    }

    /// Node ids along the route, endpoints included.
    pub fn path_ids(&self, src: usize, dst: usize) -> Option<Vec<&str>> {
        let hops = self.route(src, dst)?;
        let mut ids = vec![self.ids[src].as_str()];
        ids.extend(hops.iter().map(|h| self.ids[h.to].as_str()));
        Some(ids)
    }
}

/// Convenience: compute the table for a spec.
pub fn compute_routes(spec: &ExperimentSpec) -> Result<RoutingTable, DisconnectedError> {
    RoutingTable::compute(spec)
}

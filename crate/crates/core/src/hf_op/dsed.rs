//! Decaying subgraph edit distance.
//!
//! The edit script turning a candidate slice into the query slice comes from
//! a fixed three-stage node alignment:
//!
//! 1. nodes with equal `norm_hash` are paired in ascending id order on both
//!    sides;
//! 2. remaining nodes of equal statement kind are paired the same way, each
//!    pair costing one node modification;
//! 3. leftover candidate nodes are deleted and leftover query nodes added.
//!
//! Edge operations are the symmetric difference of the two edge sets under
//! that node mapping; edges touching an unmapped node are covered by the
//! node's own operation. Each operation costs `gamma^hops`, where `hops` is
//! the undirected distance from the operation's host node to the host
//! slice's core (largest id). Unreachable nodes count as `len` hops.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::ccg::{CcgEdge, GraphSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditKind {
    AddNode,
    DeleteNode,
    ModifyNode,
    AddEdge,
    DeleteEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EditOp {
    pub kind: EditKind,
    /// Hop distance to the host graph's core.
    pub hops: usize,
}

/// Undirected BFS distance of every node to `core`; unreachable nodes get
/// the node count.
pub(crate) fn core_distances(slice: &GraphSlice) -> Vec<usize> {
    let n = slice.nodes.len();
    if n == 0 {
        return Vec::new();
    }
    let mut adjacency = vec![Vec::new(); n];
    for e in &slice.edges {
        adjacency[e.src].push(e.dst);
        adjacency[e.dst].push(e.src);
    }
    let mut dist = vec![usize::MAX; n];
    let core = slice.core.min(n - 1);
    dist[core] = 0;
    let mut queue = VecDeque::from([core]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist.into_iter().map(|d| if d == usize::MAX { n } else { d }).collect()
}

/// Candidate node index → query node index, plus modified pairs.
fn align(query: &GraphSlice, cand: &GraphSlice) -> (Vec<Option<usize>>, Vec<bool>) {
    let mut mapping = vec![None; cand.nodes.len()];
    let mut modified = vec![false; cand.nodes.len()];
    let mut query_used = vec![false; query.nodes.len()];

    let mut by_hash: BTreeMap<_, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, n) in query.nodes.iter().enumerate() {
        by_hash.entry(n.norm_hash).or_default().0.push(i);
    }
    for (j, n) in cand.nodes.iter().enumerate() {
        by_hash.entry(n.norm_hash).or_default().1.push(j);
    }
    for (qs, cs) in by_hash.values() {
        for (&q, &c) in qs.iter().zip(cs) {
            mapping[c] = Some(q);
            query_used[q] = true;
        }
    }

    let mut by_kind: BTreeMap<_, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, n) in query.nodes.iter().enumerate().filter(|(i, _)| !query_used[*i]) {
        by_kind.entry(n.kind).or_default().0.push(i);
    }
    for (j, n) in cand.nodes.iter().enumerate().filter(|(j, _)| mapping[*j].is_none()) {
        by_kind.entry(n.kind).or_default().1.push(j);
    }
    for (qs, cs) in by_kind.values() {
        for (&q, &c) in qs.iter().zip(cs) {
            mapping[c] = Some(q);
            modified[c] = true;
        }
    }
    (mapping, modified)
}

/// The canonical edit script turning `cand` into `query`.
pub fn edit_script(query: &GraphSlice, cand: &GraphSlice) -> Vec<EditOp> {
    let (mapping, modified) = align(query, cand);
    let dq = core_distances(query);
    let dc = core_distances(cand);
    let mut ops = Vec::new();

    let mut query_image = vec![None; query.nodes.len()];
    for (c, q) in mapping.iter().enumerate() {
        match q {
            Some(q) => {
                query_image[*q] = Some(c);
                if modified[c] {
                    ops.push(EditOp { kind: EditKind::ModifyNode, hops: dc[c] });
                }
            }
            None => ops.push(EditOp { kind: EditKind::DeleteNode, hops: dc[c] }),
        }
    }
    for (q, image) in query_image.iter().enumerate() {
        if image.is_none() {
            ops.push(EditOp { kind: EditKind::AddNode, hops: dq[q] });
        }
    }

    let query_edges: HashSet<&CcgEdge> = query.edges.iter().collect();
    let mapped_cand_edges: BTreeSet<CcgEdge> = cand
        .edges
        .iter()
        .filter_map(|e| Some(CcgEdge::new(mapping[e.src]?, mapping[e.dst]?, e.kind)))
        .collect();
    for e in &cand.edges {
        if let (Some(s), Some(d)) = (mapping[e.src], mapping[e.dst]) {
            if !query_edges.contains(&CcgEdge::new(s, d, e.kind)) {
                ops.push(EditOp { kind: EditKind::DeleteEdge, hops: dc[e.src].min(dc[e.dst]) });
            }
        }
    }
    for e in &query.edges {
        if query_image[e.src].is_some() && query_image[e.dst].is_some() && !mapped_cand_edges.contains(e) {
            ops.push(EditOp { kind: EditKind::AddEdge, hops: dq[e.src].min(dq[e.dst]) });
        }
    }
    ops
}

/// `Σ gamma^hops` over a script (every operation has unit cost).
pub fn decayed_cost(script: &[EditOp], gamma: f64) -> f64 {
    script.iter().fold(0.0, |acc, op| acc + gamma.powi(op.hops as i32))
}

pub fn dsed(query: &GraphSlice, cand: &GraphSlice, gamma: f64) -> f64 {
    decayed_cost(&edit_script(query, cand), gamma)
}

use std::collections::{BTreeSet, VecDeque};

use super::{CcgEdge, CcgNode, CodeContextGraph, GraphSlice, SnippetRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("anchor {anchor} is not a node of a {len}-node graph")]
    InvalidAnchor { anchor: usize, len: usize },
    #[error("slice bounds must be positive (hops={hops}, window={window})")]
    InvalidBounds { hops: usize, window: usize },
}

/// Ids of the `window` nodes closest to `anchor` by id distance; ties go to
/// the lower id.
fn window_ids(len: usize, anchor: usize, window: usize) -> BTreeSet<usize> {
    let mut ids = BTreeSet::from([anchor]);
    let (mut lo, mut hi) = (anchor, anchor);
    while ids.len() < window.min(len) {
        let below = lo.checked_sub(1);
        let above = (hi + 1 < len).then_some(hi + 1);
        match (below, above) {
            (Some(b), Some(a)) => {
                if anchor - b <= a - anchor {
                    ids.insert(b);
                    lo = b;
                } else {
                    ids.insert(a);
                    hi = a;
                }
            }
            (Some(b), None) => {
                ids.insert(b);
                lo = b;
            }
            (None, Some(a)) => {
                ids.insert(a);
                hi = a;
            }
            (None, None) => break,
        }
    }
    ids
}

/// Backward slice: nodes that reach `anchor` within `hops` edges (any kind,
/// traversed against their direction), restricted to the `window` statements
/// nearest the anchor. Traversal stays inside the window, which makes slicing
/// idempotent on its own output.
pub fn slice_at(
    graph: &CodeContextGraph,
    anchor: usize,
    hops: usize,
    window: usize,
) -> Result<GraphSlice, SliceError> {
    if hops == 0 || window == 0 {
        return Err(SliceError::InvalidBounds { hops, window });
    }
    if anchor >= graph.len() {
        return Err(SliceError::InvalidAnchor { anchor, len: graph.len() });
    }

    let allowed = window_ids(graph.len(), anchor, window);
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); graph.len()];
    for e in &graph.edges {
        if allowed.contains(&e.src) && allowed.contains(&e.dst) {
            predecessors[e.dst].push(e.src);
        }
    }

    let mut depth = vec![usize::MAX; graph.len()];
    depth[anchor] = 0;
    let mut queue = VecDeque::from([anchor]);
    while let Some(n) = queue.pop_front() {
        if depth[n] == hops {
            continue;
        }
        for &p in &predecessors[n] {
            if depth[p] == usize::MAX {
                depth[p] = depth[n] + 1;
                queue.push_back(p);
            }
        }
    }

    let kept: Vec<usize> = (0..graph.len()).filter(|&i| depth[i] != usize::MAX).collect();
    let mut remap = vec![usize::MAX; graph.len()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let nodes: Vec<CcgNode> = kept
        .iter()
        .map(|&old| CcgNode { id: remap[old], ..graph.nodes[old].clone() })
        .collect();
    let edges: Vec<CcgEdge> = graph
        .edges
        .iter()
        .filter(|e| remap[e.src] != usize::MAX && remap[e.dst] != usize::MAX)
        .map(|e| CcgEdge::new(remap[e.src], remap[e.dst], e.kind))
        .collect();
    Ok(GraphSlice::new(remap[anchor], nodes, edges))
}

/// Source text of a slice: every line any member statement covers, in line
/// order, each line once.
pub(crate) fn slice_text(graph: &CodeContextGraph, slice: &GraphSlice) -> String {
    let mut covered = BTreeSet::new();
    for node in &slice.nodes {
        covered.extend(node.span.start_line..=node.span.end_line);
    }
    covered
        .into_iter()
        .filter_map(|line| graph.lines.get(line as usize - 1))
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join("\n")
}

/// One snippet per statement of the graph, in anchor order.
pub fn enumerate_slices(
    graph: &CodeContextGraph,
    hops: usize,
    window: usize,
) -> Result<Vec<SnippetRecord>, SliceError> {
    (0..graph.len())
        .map(|anchor| {
            let slice = slice_at(graph, anchor, hops, window)?;
            let mut text = slice_text(graph, &slice);
            if text.trim().is_empty() {
                text = slice.nodes.iter().map(|n| n.text.as_str()).collect::<Vec<_>>().join("\n");
            }
            let line = graph.nodes[anchor].span.start_line;
            let id = format!("{}:{}:{}", graph.file, line, anchor);
            Ok(SnippetRecord::new(id, graph.file.clone(), text, slice))
        })
        .collect()
}

//! Build the statement graph of a function and take a backward slice.
//!
//!     cargo run --example slice_graph

use saracoder::ccg::{build_ccg, slice_at, EdgeKind, Language};

const SOURCE: &str = "\
def summarize(rows, limit):
    seen = set()
    total = 0
    for row in rows:
        if row.id in seen:
            continue
        seen.add(row.id)
        total += row.amount
    capped = min(total, limit)
    return capped
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = build_ccg(SOURCE, Language::Python, "summary.py")?;
    for node in &graph.nodes {
        println!("{:>2} {:<12} line {:<2} {}", node.id, format!("{:?}", node.kind), node.span.start_line, node.text.lines().next().unwrap());
    }
    for kind in EdgeKind::ALL {
        let edges: Vec<String> = graph.edges_of_kind(kind).map(|e| format!("{}->{}", e.src, e.dst)).collect();
        println!("{kind:?}: {}", edges.join(" "));
    }

    let anchor = graph.len() - 1;
    for hops in [1, 3] {
        let slice = slice_at(&graph, anchor, hops, 20)?;
        let kept: Vec<&str> = slice.nodes.iter().map(|n| n.text.lines().next().unwrap()).collect();
        println!("\nslice at {anchor}, h={hops}: {} nodes, core {}", slice.len(), slice.core);
        for text in kept {
            println!("    {text}");
        }
    }
    Ok(())
}

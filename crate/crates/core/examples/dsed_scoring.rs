//! Compare slices with the decay-weighted structural edit distance.
//!
//!     cargo run --example dsed_scoring

use saracoder::ccg::{build_ccg, slice_at, GraphSlice, Language};
use saracoder::hf_op::{dsed, edit_script, structural_similarity};

fn tail_slice(source: &str) -> GraphSlice {
    let graph = build_ccg(source, Language::Python, "x.py").expect("parses");
    slice_at(&graph, graph.len() - 1, 3, 20).expect("valid anchor")
}

fn main() {
    let query = tail_slice("def f(xs):\n    acc = 0\n    for x in xs:\n        acc = acc + x\n    return acc\n");
    let candidates = [
        ("identical", "def f(xs):\n    acc = 0\n    for x in xs:\n        acc = acc + x\n    return acc\n"),
        ("renamed", "def g(ys):\n    s = 0\n    for y in ys:\n        s = s + y\n    return s\n"),
        ("flat", "def h(xs):\n    return sum(xs)\n"),
    ];

    for (name, source) in candidates {
        let cand = tail_slice(source);
        let ops = edit_script(&query, &cand);
        print!("{name:<10} {} ops", ops.len());
        for gamma in [0.25, 0.5, 0.9] {
            let d = dsed(&query, &cand, gamma);
            print!("  γ={gamma}: d={d:.3} sim={:.3}", structural_similarity(d));
        }
        println!();
        for op in ops {
            println!("    {:?} at {} hops", op.kind, op.hops);
        }
    }
}

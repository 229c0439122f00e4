use std::collections::HashMap;

use crate::embedding::{cosine, EmbeddingVector};
use crate::lexical::{Candidate, Stage};

/// Nearest-rank quantile: the element at 1-based position `⌈q·N⌉` of the
/// ascending sort. `None` for an empty set.
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // guard against q·N landing a hair above an integer (0.7 * 10 = 7.000000000000001)
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Some(sorted[rank - 1])
}

/// Sets `embed_sim` on every candidate that has a vector.
pub fn annotate_similarity(
    candidates: &mut [Candidate],
    query: &EmbeddingVector,
    vectors: &HashMap<String, EmbeddingVector>,
) {
    for c in candidates {
        if let Some(v) = vectors.get(&c.snippet_id) {
            c.embed_sim = Some(cosine(query, v));
        }
    }
}

/// Keeps candidates whose similarity reaches the `q`-quantile of the pool's
/// similarities, in input order. A single candidate always survives.
pub fn sad_filter(candidates: Vec<Candidate>, q: f64) -> Vec<Candidate> {
    let sims: Vec<f64> = candidates.iter().map(|c| c.embed_sim.unwrap_or(f64::NEG_INFINITY)).collect();
    let Some(tau) = nearest_rank_quantile(&sims, q) else {
        return candidates;
    };
    candidates
        .into_iter()
        .zip(sims)
        .filter(|(_, s)| *s >= tau)
        .map(|(mut c, _)| {
            c.rank_trace.push(Stage::Sad);
            c
        })
        .collect()
}

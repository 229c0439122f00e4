use std::collections::HashMap;

use crate::embedding::{cosine, EmbeddingVector};
use crate::lexical::{Candidate, Stage};

/// Min-max normalized composite scores; an all-equal pool maps to 1.0.
pub fn relevance(candidates: &[Candidate]) -> Vec<f64> {
    let scores: Vec<f64> = candidates.iter().map(Candidate::score).collect();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    scores
        .iter()
        .map(|s| if range > 0.0 && range.is_finite() { (s - min) / range } else { 1.0 })
        .collect()
}

/// Maximal marginal relevance selection of up to `top_k` candidates.
///
/// Each round picks the unselected candidate maximizing
/// `lambda · relevance − (1 − lambda) · max cosine to the selected set`
/// (0 while nothing is selected), ties going to the smaller snippet id.
/// Candidates without a vector contribute zero similarity.
pub fn dar_rerank(
    candidates: Vec<Candidate>,
    vectors: &HashMap<String, EmbeddingVector>,
    lambda: f64,
    top_k: usize,
) -> Vec<Candidate> {
    let rel = relevance(&candidates);
    let n = candidates.len();
    let mut max_sim = vec![0.0f64; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(top_k.min(n));

    while order.len() < top_k && !remaining.is_empty() {
        let objective = |i: usize| lambda * rel[i] - (1.0 - lambda) * max_sim[i];
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                objective(a)
                    .total_cmp(&objective(b))
                    .then_with(|| candidates[b].snippet_id.cmp(&candidates[a].snippet_id))
            })
            .expect("remaining is non-empty");
        remaining.swap_remove(pos);
        order.push(best);
        if let Some(chosen) = vectors.get(&candidates[best].snippet_id) {
            for &i in &remaining {
                if let Some(v) = vectors.get(&candidates[i].snippet_id) {
                    max_sim[i] = max_sim[i].max(cosine(chosen, v));
                }
            }
        }
    }

    let mut slots: Vec<Option<Candidate>> = candidates.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| {
            let mut c = slots[i].take().expect("each index selected once");
            c.rank_trace.push(Stage::Dar);
            c
        })
        .collect()
}

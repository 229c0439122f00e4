use rayon::prelude::*;

use super::dsed::dsed;
use crate::ccg::GraphSlice;
use crate::lexical::{by_score_then_id, Candidate, Stage};
use crate::store::SnippetStore;

/// Maps a distance in `[0, ∞)` to a similarity in `(0, 1]`.
pub fn structural_similarity(distance: f64) -> f64 {
    1.0 / (1.0 + distance)
}

/// `alpha · lexical + (1 − alpha) · structural`.
pub fn composite_score(alpha: f64, lexical: f64, structural: f64) -> f64 {
    alpha * lexical + (1.0 - alpha) * structural
}

/// Sorts by composite score descending, ties by ascending snippet id.
pub fn sort_by_composite(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| by_score_then_id(a.score(), &a.snippet_id, b.score(), &b.snippet_id));
}

/// Scores each candidate's slice against the query slice and orders the
/// pool by the composite score.
pub fn tpm_score(
    mut candidates: Vec<Candidate>,
    query: &GraphSlice,
    store: &SnippetStore,
    alpha: f64,
    gamma: f64,
) -> Vec<Candidate> {
    let empty = GraphSlice::default();
    candidates.par_iter_mut().for_each(|c| {
        let slice = store.get(&c.snippet_id).map(|r| &r.slice).unwrap_or(&empty);
        let sim = structural_similarity(dsed(query, slice, gamma));
        c.struct_sim = Some(sim);
        c.composite = Some(composite_score(alpha, c.lexical_score, sim));
        c.rank_trace.push(Stage::Tpm);
    });
    sort_by_composite(&mut candidates);
    candidates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccg::{build_ccg, enumerate_slices, Language, SnippetRecord};

    #[test]
    fn formula() {
        assert_eq!(structural_similarity(0.0), 1.0);
        assert_eq!(structural_similarity(2.0), 1.0 / 3.0);
        assert_eq!(composite_score(0.5, 1.0, 1.0), 1.0);
        assert_eq!(composite_score(0.0, 0.9, 0.25), 0.25);
    }

    fn store_from(src: &str) -> (SnippetStore, Vec<SnippetRecord>) {
        let g = build_ccg(src, Language::Python, "s.py").unwrap();
        let records = enumerate_slices(&g, 3, 20).unwrap();
        (SnippetStore::from_records(records.clone()), records)
    }

    #[test]
    fn identical_slice_scores_one() {
        let (store, records) = store_from("a = 1\nb = a\nc = b\n");
        let query = records[2].slice.clone();
        let out = tpm_score(vec![Candidate::new(records[2].id.clone(), 1.0)], &query, &store, 0.5, 0.5);
        assert_eq!(out[0].composite, Some(1.0));
        assert_eq!(out[0].struct_sim, Some(1.0));
    }

    #[test]
    fn alpha_one_keeps_lexical_order() {
        let (store, records) = store_from("a = 1\nb = a\nif b:\n    c = b\nprint(c)\n");
        let query = records[4].slice.clone();
        let pool: Vec<Candidate> = records
            .iter()
            .enumerate()
            .map(|(i, r)| Candidate::new(r.id.clone(), 0.1 * (5 - i) as f64))
            .collect();
        let out = tpm_score(pool.clone(), &query, &store, 1.0, 0.5);
        let order: Vec<_> = out.iter().map(|c| c.snippet_id.clone()).collect();
        let lexical: Vec<_> = pool.iter().map(|c| c.snippet_id.clone()).collect();
        assert_eq!(order, lexical);
    }

    #[test]
    fn alpha_zero_prefers_closer_structure() {
        // struct_sims 1.0 (dsed 0) vs 1/3 (dsed 2)
        let mut a = Candidate::new("z", 0.0);
        a.composite = Some(composite_score(0.0, 0.0, structural_similarity(0.0)));
        let mut b = Candidate::new("a", 0.9);
        b.composite = Some(composite_score(0.0, 0.9, structural_similarity(2.0)));
        let mut pool = vec![b, a];
        sort_by_composite(&mut pool);
        assert_eq!(pool[0].snippet_id, "z");
        assert!((pool[1].composite.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}

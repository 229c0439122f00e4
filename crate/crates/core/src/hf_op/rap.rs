use std::collections::HashSet;

use crate::fingerprint::{fingerprint, Fingerprint};
use crate::lexical::{Candidate, Stage};
use crate::store::SnippetStore;

/// Drops candidates whose normalized text was already seen earlier in the
/// list. Single pass, first occurrence wins, order kept.
pub fn rap_dedup(candidates: Vec<Candidate>, store: &SnippetStore) -> Vec<Candidate> {
    dedup_by(candidates, |c| store.get(&c.snippet_id).map(|r| fingerprint(&r.text)))
}

/// Generic form: `key` returns the fingerprint of a candidate, or `None` to
/// always keep it.
pub fn dedup_by<F>(candidates: Vec<Candidate>, mut key: F) -> Vec<Candidate>
where
    F: FnMut(&Candidate) -> Option<Fingerprint>,
{
    let mut seen: HashSet<Fingerprint> = HashSet::with_capacity(candidates.len());
    candidates
        .into_iter()
        .filter(|c| key(c).is_none_or(|fp| seen.insert(fp)))
        .map(|mut c| {
            c.rank_trace.push(Stage::Rap);
            c
        })
        .collect()
}

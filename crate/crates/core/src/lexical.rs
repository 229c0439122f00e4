//! Sub-token bags and the initial lexical candidate pool.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::store::SnippetStore;

/// Multiset of lowercase sub-tokens.
pub type TokenBag = BTreeMap<String, u32>;

/// Splits `text` into lowercase sub-tokens, in order of appearance.
///
/// Identifiers are cut on underscores and camelCase boundaries
/// (`getHTTPResponse` yields `get`, `http`, `response`).
pub fn subtokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
        for part in word.split('_') {
            split_camel(part, &mut out);
        }
    }
    out
}

fn split_camel(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let (prev, cur) = (chars[i - 1], chars[i]);
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        let boundary = (cur.is_uppercase() && (prev.is_lowercase() || prev.is_numeric()))
            || (cur.is_uppercase() && prev.is_uppercase() && next_lower);
        if boundary {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    if start < chars.len() {
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
}

pub fn tokenize(text: &str) -> TokenBag {
    let mut bag = TokenBag::new();
    for token in subtokens(text) {
        *bag.entry(token).or_insert(0) += 1;
    }
    bag
}

/// Weighted Jaccard similarity: sum of per-token minimum counts over sum of
/// maximum counts. Two empty bags are identical and score 1.
pub fn weighted_jaccard(a: &TokenBag, b: &TokenBag) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    let mut ia = a.iter().peekable();
    let mut ib = b.iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (Some((ka, &ca)), Some((kb, &cb))) => match ka.cmp(kb) {
                Ordering::Less => {
                    union += ca as u64;
                    ia.next();
                }
                Ordering::Greater => {
                    union += cb as u64;
                    ib.next();
                }
                Ordering::Equal => {
                    inter += ca.min(cb) as u64;
                    union += ca.max(cb) as u64;
                    ia.next();
                    ib.next();
                }
            },
            (Some((_, &ca)), None) => {
                union += ca as u64;
                ia.next();
            }
            (None, Some((_, &cb))) => {
                union += cb as u64;
                ib.next();
            }
            (None, None) => break,
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Pipeline stages a candidate can survive, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Lexical,
    Sad,
    Rap,
    Tpm,
    Dar,
}

/// A snippet moving through the refinement stages. Later-stage scores stay
/// `None` until the stage that computes them has run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub snippet_id: String,
    pub lexical_score: f64,
    pub embed_sim: Option<f64>,
    pub struct_sim: Option<f64>,
    pub composite: Option<f64>,
    pub rank_trace: Vec<Stage>,
}

impl Candidate {
    pub fn new(snippet_id: impl Into<String>, lexical_score: f64) -> Self {
        Self {
            snippet_id: snippet_id.into(),
            lexical_score,
            embed_sim: None,
            struct_sim: None,
            composite: None,
            rank_trace: vec![Stage::Lexical],
        }
    }

    /// Composite score, falling back to the lexical score before scoring.
    pub fn score(&self) -> f64 {
        self.composite.unwrap_or(self.lexical_score)
    }
}

/// Descending by score, then ascending by snippet id.
pub(crate) fn by_score_then_id(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Top `top_k × expansion` snippets by weighted Jaccard similarity to the
/// query text.
pub fn retrieve_initial(query: &str, store: &SnippetStore, top_k: usize, expansion: usize) -> Vec<Candidate> {
    assert!(top_k >= 1 && expansion >= 1, "top_k and expansion must be positive");
    let query_bag = tokenize(query);
    let mut scored: Vec<Candidate> = store
        .records()
        .par_iter()
        .map(|r| Candidate::new(r.id.clone(), weighted_jaccard(&query_bag, &r.token_bag)))
        .collect();
    scored.sort_by(|a, b| by_score_then_id(a.lexical_score, &a.snippet_id, b.lexical_score, &b.snippet_id));
    scored.truncate(top_k.saturating_mul(expansion));
    scored
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::ccg::{GraphSlice, SnippetRecord};

    fn bag(tokens: &[&str]) -> TokenBag {
        let mut b = TokenBag::new();
        for t in tokens {
            *b.entry(t.to_string()).or_insert(0) += 1;
        }
        b
    }

    #[test]
    fn camel_and_snake() {
        assert_eq!(tokenize("getUserName"), bag(&["get", "user", "name"]));
        assert_eq!(tokenize("snake_case_id"), bag(&["snake", "case", "id"]));
        assert!(tokenize("").is_empty());
        assert_eq!(subtokens("getHTTPResponse"), ["get", "http", "response"]);
        assert_eq!(subtokens("self.x = foo(x)"), ["self", "x", "foo", "x"]);
        assert_eq!(subtokens("__init__"), ["init"]);
        assert_eq!(subtokens("v2Model"), ["v2", "model"]);
    }

    #[test]
    fn jaccard_examples() {
        let a = bag(&["a", "a", "b"]);
        let b = bag(&["a", "c"]);
        // min: a=1 ; max: a=2,b=1,c=1
        assert_eq!(weighted_jaccard(&a, &b), 0.25);
        assert_eq!(weighted_jaccard(&a, &a), 1.0);
        assert_eq!(weighted_jaccard(&bag(&["x"]), &bag(&["y"])), 0.0);
        assert_eq!(weighted_jaccard(&TokenBag::new(), &TokenBag::new()), 1.0);
    }

    fn store_of(texts: &[&str]) -> SnippetStore {
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, t)| SnippetRecord::new(format!("s{i:02}"), "f.py".into(), t.to_string(), GraphSlice::default()))
            .collect();
        SnippetStore::from_records(records)
    }

    #[test]
    fn identity_ranks_first() {
        let store = store_of(&["alpha beta", "fooBar baz", "gamma"]);
        let out = retrieve_initial("foo_bar baz", &store, 1, 2);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].snippet_id, "s01");
        assert_eq!(out[0].lexical_score, 1.0);
        assert_eq!(out[0].rank_trace, [Stage::Lexical]);
    }

    #[test]
    fn pool_cap_and_ties() {
        let texts: Vec<String> = (0..30).map(|i| format!("value_{} = item", i % 3)).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let store = store_of(&refs);
        let out = retrieve_initial("item", &store, 4, 5);
        assert_eq!(out.len(), 20);
        for pair in out.windows(2) {
            assert!(
                pair[0].lexical_score > pair[1].lexical_score
                    || (pair[0].lexical_score == pair[1].lexical_score && pair[0].snippet_id < pair[1].snippet_id)
            );
        }
        assert!(retrieve_initial("x", &SnippetStore::default(), 4, 5).is_empty());
    }

    fn small_bag() -> impl Strategy<Value = TokenBag> {
        prop::collection::btree_map("[a-e]", 1u32..4, 0..5)
    }

    proptest! {
        #[test]
        fn jaccard_properties(a in small_bag(), b in small_bag()) {
            let s = weighted_jaccard(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, weighted_jaccard(&b, &a));
            prop_assert_eq!(s == 1.0, a == b);
        }

        #[test]
        fn tokenize_is_lowercase_and_deterministic(text in "[a-zA-Z_ .()=0-9]{0,40}") {
            let bag = tokenize(&text);
            prop_assert_eq!(&bag, &tokenize(&text));
            for k in bag.keys() {
                prop_assert!(!k.is_empty());
                prop_assert_eq!(k.to_lowercase(), k.clone());
            }
        }
    }
}

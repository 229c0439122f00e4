//! Candidate refinement: semantic filtering, duplicate pruning, structural
//! scoring and diversity reranking of the initial lexical pool.

mod dar;
pub mod dsed;
mod rap;
mod sad;
mod tpm;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ccg::{self, build_ccg_with_mode, GraphSlice, Language, ParseMode};
use crate::embedding::{EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::lexical::{retrieve_initial, Candidate};
use crate::store::SnippetStore;

pub use dar::{dar_rerank, relevance};
pub use dsed::{decayed_cost, edit_script, EditKind, EditOp};
pub use rap::{dedup_by, rap_dedup};
pub use sad::{annotate_similarity, nearest_rank_quantile, sad_filter};
pub use tpm::{composite_score, sort_by_composite, structural_similarity, tpm_score};

pub fn dsed(query: &GraphSlice, cand: &GraphSlice, gamma: f64) -> f64 {
    dsed::dsed(query, cand, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub sad: bool,
    pub rap: bool,
    pub tpm: bool,
    pub dar: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self { sad: true, rap: true, tpm: true, dar: true }
    }
}

impl StageToggles {
    pub fn none() -> Self {
        Self { sad: false, rap: false, tpm: false, dar: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub quantile_q: f64,
    pub gamma: f64,
    /// Weight of the lexical score in the composite; the rest goes to structure.
    pub alpha: f64,
    pub lambda: f64,
    pub top_k: usize,
    pub expansion_p: usize,
    pub stages: StageToggles,
    /// When false the structural term is dropped and TPM ranks by the
    /// lexical score alone.
    pub structure: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quantile_q: 0.75,
            gamma: 0.5,
            alpha: 0.5,
            lambda: 0.7,
            top_k: 4,
            expansion_p: 5,
            stages: StageToggles::default(),
            structure: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid {field}: {value} (expected {expected})")]
pub struct ConfigError {
    pub field: &'static str,
    pub value: String,
    pub expected: &'static str,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open = |field, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError { field, value: v.to_string(), expected: "a value in (0, 1)" })
            }
        };
        let closed = |field, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError { field, value: v.to_string(), expected: "a value in [0, 1]" })
            }
        };
        open("quantile_q", self.quantile_q)?;
        open("gamma", self.gamma)?;
        closed("alpha", self.alpha)?;
        closed("lambda", self.lambda)?;
        for (field, v) in [("top_k", self.top_k), ("expansion_p", self.expansion_p)] {
            if v == 0 {
                return Err(ConfigError { field, value: "0".into(), expected: "a positive integer" });
            }
        }
        Ok(())
    }
}

/// The retrieval query derived from an unfinished file.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// Source from the first of the last `window` statements to the end of
    /// the context.
    pub text: String,
    /// Backward slice anchored at the last complete statement.
    pub slice: GraphSlice,
}

impl Query {
    /// Builds the query from unfinished source. The trailing incomplete
    /// statement does not parse and is kept only in `text`.
    pub fn from_context(context: &str, language: Language, file: &str, hops: usize, window: usize) -> Self {
        let context = ccg::normalize_newlines(context);
        let graph = match build_ccg_with_mode(&context, language, file, ParseMode::Lenient) {
            Ok(g) if !g.is_empty() => g,
            _ => return Self { text: context, slice: GraphSlice::default() },
        };
        let first = graph.len().saturating_sub(window.max(1));
        let start_line = graph.nodes[first].span.start_line as usize;
        let text = context.lines().skip(start_line - 1).collect::<Vec<_>>().join("\n");
        let slice = ccg::slice_at(&graph, graph.len() - 1, hops.max(1), window.max(1)).unwrap_or_default();
        Self { text, slice }
    }
}

/// Runs the enabled stages over the initial lexical pool and returns the
/// final candidates, best first.
///
/// A blank query yields no candidates. Vectors are only requested when SAD
/// or DAR is enabled; provider errors are the only failure.
pub fn run_pipeline(
    query: &Query,
    store: &SnippetStore,
    provider: &dyn EmbeddingProvider,
    config: &PipelineConfig,
) -> Result<Vec<Candidate>, EmbedError> {
    if query.text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let stages = config.stages;
    let mut candidates = retrieve_initial(&query.text, store, config.top_k, config.expansion_p);
    if candidates.is_empty() {
        return Ok(candidates);
    }

    let vectors = if stages.sad || stages.dar {
        let mut texts = vec![query.text.clone()];
        texts.extend(candidates.iter().map(|c| store.get(&c.snippet_id).map_or_else(String::new, |r| r.text.clone())));
        let mut embedded = provider.embed(&texts)?.into_iter();
        let query_vec = embedded.next().expect("one vector per input");
        let map: HashMap<String, EmbeddingVector> =
            candidates.iter().map(|c| c.snippet_id.clone()).zip(embedded).collect();
        Some((query_vec, map))
    } else {
        None
    };

    if stages.sad {
        let (query_vec, map) = vectors.as_ref().expect("vectors computed for SAD");
        annotate_similarity(&mut candidates, query_vec, map);
        candidates = sad_filter(candidates, config.quantile_q);
    }
    if stages.rap {
        candidates = rap_dedup(candidates, store);
    }
    if stages.tpm {
        let alpha = if config.structure { config.alpha } else { 1.0 };
        candidates = tpm_score(candidates, &query.slice, store, alpha, config.gamma);
    } else {
        for c in &mut candidates {
            c.composite = Some(c.lexical_score);
        }
    }
    if stages.dar {
        let (_, map) = vectors.as_ref().expect("vectors computed for DAR");
        candidates = dar_rerank(candidates, map, config.lambda, config.top_k);
    } else {
        candidates.truncate(config.top_k);
    }
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccg::{build_ccg, enumerate_slices};
    use crate::embedding::LocalHashProvider;
    use crate::lexical::Stage;

    fn store(files: &[(&str, &str)]) -> SnippetStore {
        let mut records = Vec::new();
        for (name, src) in files {
            let g = build_ccg(src, Language::Python, name).unwrap();
            records.extend(enumerate_slices(&g, 3, 20).unwrap());
        }
        SnippetStore::from_records(records)
    }

    #[test]
    fn defaults_validate() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig { gamma: 1.0, ..Default::default() };
        assert_eq!(bad.validate().unwrap_err().field, "gamma");
        let bad = PipelineConfig { top_k: 0, ..Default::default() };
        assert_eq!(bad.validate().unwrap_err().field, "top_k");
        assert!(PipelineConfig { alpha: 0.0, lambda: 1.0, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn query_from_context_keeps_trailing_fragment() {
        let ctx = "import os\nx = os.getcwd()\ny = x.upper()\nz = y.";
        let q = Query::from_context(ctx, Language::Python, "q.py", 3, 2);
        assert_eq!(q.text, "x = os.getcwd()\ny = x.upper()\nz = y.");
        assert_eq!(q.slice.nodes.last().unwrap().text, "y = x.upper()");
        let empty = Query::from_context("", Language::Python, "q.py", 3, 20);
        assert!(empty.slice.is_empty());
    }

    #[test]
    fn all_stages_off_is_lexical_top_k() {
        let s = store(&[("a.py", "a = 1\nb = a + 1\nc = b * 2\nprint(c)\nd = c - a\n")]);
        let q = Query::from_context("b = a + 1\nc = b", Language::Python, "q.py", 3, 20);
        let config = PipelineConfig { stages: StageToggles::none(), top_k: 2, ..Default::default() };
        let out = run_pipeline(&q, &s, &LocalHashProvider, &config).unwrap();
        let lexical = retrieve_initial(&q.text, &s, 2, 5);
        let ids: Vec<_> = out.iter().map(|c| &c.snippet_id).collect();
        let expected: Vec<_> = lexical.iter().take(2).map(|c| &c.snippet_id).collect();
        assert_eq!(ids, expected);
        assert!(out.iter().all(|c| c.rank_trace == [Stage::Lexical]));
    }

    #[test]
    fn full_pipeline_is_deterministic() {
        let s = store(&[
            ("a.py", "def f(x):\n    y = x + 1\n    return y\n"),
            ("b.py", "def g(x):\n    y = x + 1\n    return y\n"),
            ("c.py", "total = 0\nfor v in items:\n    total += v\n"),
        ]);
        let q = Query::from_context("def h(x):\n    y = x + 1\n", Language::Python, "q.py", 3, 20);
        let config = PipelineConfig::default();
        let a = run_pipeline(&q, &s, &LocalHashProvider, &config).unwrap();
        let b = run_pipeline(&q, &s, &LocalHashProvider, &config).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty() && a.len() <= config.top_k);
        for c in &a {
            assert_eq!(c.rank_trace.first(), Some(&Stage::Lexical));
            assert_eq!(c.rank_trace.last(), Some(&Stage::Dar));
        }
    }

    #[test]
    fn blank_query_yields_nothing() {
        let s = store(&[("a.py", "a = 1\n")]);
        let q = Query::from_context("  \n", Language::Python, "q.py", 3, 20);
        assert!(run_pipeline(&q, &s, &LocalHashProvider, &PipelineConfig::default()).unwrap().is_empty());
    }
}

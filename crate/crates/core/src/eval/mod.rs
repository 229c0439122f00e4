//! Completion-quality metrics and batch evaluation.

mod lexer;
mod metrics;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ccg::Language;
use crate::completer::{Completer, CompletionInput};
use crate::engine::Engine;
use crate::lexical::Stage;

pub use lexer::identifiers;
pub use metrics::{
    edit_similarity, exact_match, identifier_metrics, levenshtein, multiset_f1, normalize_completion, score,
    SampleScores,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSample {
    pub id: String,
    pub context: String,
    pub groundtruth: String,
    /// Repository-relative path of the unfinished file.
    pub file: String,
    #[serde(default = "default_language")]
    pub language: Language,
}

fn default_language() -> Language {
    Language::Python
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Sample { path: PathBuf, line: usize, message: String },
    #[error("no samples to evaluate")]
    NoSamples,
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Parses a JSONL sample file. Blank lines are skipped; errors name the
/// 1-based line.
pub fn load_samples(path: &Path) -> Result<Vec<EvalSample>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })?;
    parse_samples(&text, path)
}

pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<EvalSample>, EvalError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Sample { path: path.to_path_buf(), line: i + 1, message };
        let sample: EvalSample = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if sample.groundtruth.trim().is_empty() {
            return Err(err("empty groundtruth".into()));
        }
        samples.push(sample);
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedCandidate {
    pub snippet_id: String,
    pub score: f64,
    pub rank_trace: Vec<Stage>,
}

/// One line of the per-sample output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub completion: Option<String>,
    pub scores: Option<SampleScores>,
    pub candidates: Vec<TracedCandidate>,
    pub prompt_tokens: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub em: f64,
    pub es: f64,
    pub id_em: f64,
    pub id_f1: f64,
    /// Samples that were scored.
    pub sample_count: usize,
    /// Samples excluded after a completer or budget failure.
    pub failed_count: usize,
}

impl MetricReport {
    fn from_results(results: &[SampleResult]) -> Self {
        let scored: Vec<&SampleScores> = results.iter().filter_map(|r| r.scores.as_ref()).collect();
        let n = scored.len();
        let mean = |f: fn(&SampleScores) -> f64| {
            if n == 0 {
                0.0
            } else {
                scored.iter().map(|s| f(s)).sum::<f64>() / n as f64
            }
        };
        Self {
            em: mean(|s| s.em),
            es: mean(|s| s.es),
            id_em: mean(|s| s.id_em),
            id_f1: mean(|s| s.id_f1),
            sample_count: n,
            failed_count: results.len() - n,
        }
    }
}

fn evaluate_one(sample: &EvalSample, engine: &Engine, completer: &dyn Completer) -> SampleResult {
    let mut result = SampleResult {
        id: sample.id.clone(),
        completion: None,
        scores: None,
        candidates: Vec::new(),
        prompt_tokens: 0,
        error: None,
    };
    let retrieval = match engine.retrieve(&sample.context, &sample.file) {
        Ok(r) => r,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    result.prompt_tokens = retrieval.prompt.approx_tokens;
    result.candidates = retrieval
        .candidates
        .iter()
        .map(|c| TracedCandidate { snippet_id: c.snippet_id.clone(), score: c.score(), rank_trace: c.rank_trace.clone() })
        .collect();
    let input = CompletionInput {
        prompt: &retrieval.prompt.text,
        max_tokens: engine.config().max_tokens,
        top_snippet: retrieval.candidates.first().and_then(|c| engine.store().get(&c.snippet_id)),
        store: engine.store(),
    };
    match completer.complete(&input) {
        Ok(completion) => {
            result.scores = Some(score(&completion, &sample.groundtruth, sample.language));
            result.completion = Some(completion);
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

/// Evaluates every sample with `workers` threads (0 = all cores). Results
/// come back in sample order, so reports are reproducible.
pub fn run_eval(
    samples: &[EvalSample],
    engine: &Engine,
    completer: &dyn Completer,
    workers: usize,
) -> Result<(MetricReport, Vec<SampleResult>), EvalError> {
    if samples.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let results: Vec<SampleResult> =
        pool.install(|| samples.par_iter().map(|s| evaluate_one(s, engine, completer)).collect());
    for r in &results {
        if let Some(e) = &r.error {
            log::warn!("sample {} failed: {e}", r.id);
        }
    }
    Ok((MetricReport::from_results(&results), results))
}

pub fn write_results<W: Write>(results: &[SampleResult], mut out: W) -> io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_errors_name_the_line() {
        let good = r#"{"id":"a","context":"x = ","groundtruth":"1","file":"m.py"}"#;
        let text = format!("{good}\n\n{{not json\n");
        match parse_samples(&text, Path::new("s.jsonl")) {
            Err(EvalError::Sample { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let samples = parse_samples(good, Path::new("s.jsonl")).unwrap();
        assert_eq!(samples[0].language, Language::Python);
    }

    #[test]
    fn empty_groundtruth_rejected() {
        let line = r#"{"id":"a","context":"x","groundtruth":"  ","file":"m.py"}"#;
        assert!(matches!(parse_samples(line, Path::new("s")), Err(EvalError::Sample { line: 1, .. })));
    }

    #[test]
    fn report_excludes_failures() {
        let ok = |em| SampleResult {
            id: "x".into(),
            completion: Some(String::new()),
            scores: Some(SampleScores { em, es: em, id_em: em, id_f1: em }),
            candidates: Vec::new(),
            prompt_tokens: 0,
            error: None,
        };
        let failed = SampleResult { scores: None, error: Some("down".into()), ..ok(0.0) };
        let report = MetricReport::from_results(&[ok(1.0), failed, ok(0.0)]);
        assert_eq!(report.sample_count, 2);
        assert_eq!(report.failed_count, 1);
        assert_eq!(report.em, 0.5);
    }
}

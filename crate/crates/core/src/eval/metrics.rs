use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lexer::identifiers;
use crate::ccg::Language;

/// Trims outer whitespace and trailing whitespace on every line.
pub fn normalize_completion(text: &str) -> String {
    text.lines().map(str::trim_end).collect::<Vec<_>>().join("\n").trim().to_string()
}

pub fn exact_match(pred: &str, truth: &str) -> f64 {
    if normalize_completion(pred) == normalize_completion(truth) {
        1.0
    } else {
        0.0
    }
}

/// Character-level Levenshtein distance (two-row DP).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 − lev / max(len)`, on normalized text. Two empty strings score 1.
pub fn edit_similarity(pred: &str, truth: &str) -> f64 {
    let (p, t) = (normalize_completion(pred), normalize_completion(truth));
    let longest = p.chars().count().max(t.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&p, &t) as f64 / longest as f64
}

/// Multiset F1 over identifier sequences.
pub fn multiset_f1(pred: &[String], truth: &[String]) -> f64 {
    match (pred.is_empty(), truth.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in truth {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for p in pred {
        if let Some(c) = counts.get_mut(p.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / truth.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// `(id_em, id_f1)` over the identifiers of both texts.
pub fn identifier_metrics(pred: &str, truth: &str, language: Language) -> (f64, f64) {
    let p = identifiers(&normalize_completion(pred), language);
    let t = identifiers(&normalize_completion(truth), language);
    let em = if p == t { 1.0 } else { 0.0 };
    (em, multiset_f1(&p, &t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub em: f64,
    pub es: f64,
    pub id_em: f64,
    pub id_f1: f64,
}

pub fn score(pred: &str, truth: &str, language: Language) -> SampleScores {
    let (id_em, id_f1) = identifier_metrics(pred, truth, language);
    SampleScores { em: exact_match(pred, truth), es: edit_similarity(pred, truth), id_em, id_f1 }
}

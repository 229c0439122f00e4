use super::{EmbedError, EmbeddingProvider, EmbeddingVector, EMBEDDING_DIM, MAX_INPUT_TOKENS};
use crate::fingerprint::{md5, normalize};
use crate::lexical::subtokens;

/// Signed feature hashing of sub-tokens into 768 buckets.
///
/// Deterministic across processes and platforms; never touches the network.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalHashProvider;

impl LocalHashProvider {
    pub const TAG: &'static str = "local-hash";

    fn embed_one(&self, index: usize, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let normalized = normalize(text);
        if normalized.is_empty() {
            return Err(EmbedError::EmptyInput { index });
        }
        let mut features = subtokens(&normalized);
        features.truncate(MAX_INPUT_TOKENS);
        if features.is_empty() {
            // punctuation-only input
            features.push(normalized);
        }
        let mut values = vec![0.0f64; EMBEDDING_DIM];
        for feature in &features {
            let h = md5(feature.as_bytes()).0;
            let bucket = (h % EMBEDDING_DIM as u128) as usize;
            let sign = if h >> 127 == 1 { -1.0 } else { 1.0 };
            values[bucket] += sign;
        }
        if values.iter().all(|v| *v == 0.0) {
            // every feature cancelled out; fall back to the unsigned histogram
            for feature in &features {
                values[(md5(feature.as_bytes()).0 % EMBEDDING_DIM as u128) as usize] += 1.0;
            }
        }
        EmbeddingVector::normalized(values, Self::TAG)
    }
}

impl EmbeddingProvider for LocalHashProvider {
    fn tag(&self) -> &str {
        Self::TAG
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().enumerate().map(|(i, t)| self.embed_one(i, t)).collect()
    }
}

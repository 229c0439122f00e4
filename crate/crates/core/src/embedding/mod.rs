//! Fixed-width, unit-length snippet embeddings.
//!
//! Every provider returns [`EMBEDDING_DIM`]-dimensional L2-normalized
//! vectors, one per input, in input order. [`LocalHashProvider`] is a
//! deterministic in-process stand-in; [`RemoteProvider`] talks to an HTTP
//! encoder service; [`CachedProvider`] wraps either with a fingerprint-keyed
//! LRU cache.

mod cache;
mod local;
mod remote;

use serde::{Deserialize, Serialize};

pub use cache::{CachedProvider, DEFAULT_CACHE_CAPACITY};
pub use local::LocalHashProvider;
pub use remote::{
    EmbedRequest, EmbedResponse, ErrorBody, HealthStatus, RemoteProvider, DEFAULT_RETRIES, DEFAULT_TIMEOUT, MAX_BATCH,
};

pub const EMBEDDING_DIM: usize = 768;

/// Inputs are cut to this many sub-tokens before encoding.
pub const MAX_INPUT_TOKENS: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("input {index} is empty after normalization")]
    EmptyInput { index: usize },
    #[error("embedding service {endpoint} unreachable after {retries} retries: {message}")]
    Transport { endpoint: String, retries: u32, message: String },
    #[error("embedding service returned status {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("malformed embedding response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    source: String,
}

impl EmbeddingVector {
    /// Scales `values` to unit length. Fails on a wrong dimension or a zero
    /// (or non-finite) vector.
    pub fn normalized(values: Vec<f64>, source: impl Into<String>) -> Result<Self, EmbedError> {
        if values.len() != EMBEDDING_DIM {
            return Err(EmbedError::Protocol(format!(
                "expected {EMBEDDING_DIM} dimensions, got {}",
                values.len()
            )));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(EmbedError::Protocol("vector has zero or non-finite norm".into()));
        }
        Ok(Self { values: values.into_iter().map(|v| v / norm).collect(), source: source.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two unit vectors (their dot product), clamped to
/// `[-1, 1]`.
///
/// Panics if the dimensions differ.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(a.values.len(), b.values.len(), "embedding dimension mismatch");
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0)
}

pub trait EmbeddingProvider: Send + Sync {
    /// Provider tag recorded on every vector it produces.
    fn tag(&self) -> &str;

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed(texts)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn tag(&self) -> &str {
        (**self).tag()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed(texts)
    }
}

/// Contract checks any provider must pass. Shared by the unit tests and
/// the remote-provider integration tests.
#[doc(hidden)]
pub mod contract {
    use super::*;

    pub fn check(provider: &dyn EmbeddingProvider) {
        let texts: Vec<String> = ["def add(a, b):\n    return a + b", "import os", "def add(a, b):\n    return a + b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let vectors = provider.embed(&texts).expect("provider embeds");
        assert_eq!(vectors.len(), texts.len(), "one vector per input");
        for v in &vectors {
            assert_eq!(v.values().len(), EMBEDDING_DIM);
            assert!((v.norm() - 1.0).abs() <= 1e-6, "norm {}", v.norm());
        }
        assert_eq!(vectors[0], vectors[2], "deterministic for equal inputs");
        assert!((cosine(&vectors[0], &vectors[0]) - 1.0).abs() <= 1e-9);

        let again = provider.embed(&texts[1..2]).expect("provider embeds");
        assert_eq!(again[0], vectors[1], "order preserved and stable across calls");
        assert!(provider.embed(&[]).expect("empty batch").is_empty());
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn unit(i: usize) -> EmbeddingVector {
        let mut v = vec![0.0; EMBEDDING_DIM];
        v[i] = 1.0;
        EmbeddingVector::normalized(v, "test").unwrap()
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&unit(3), &unit(3)) - 1.0).abs() <= 1e-9);
        assert!(cosine(&unit(3), &unit(4)).abs() <= 1e-9);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(EmbeddingVector::normalized(vec![1.0; 3], "x").is_err());
        assert!(EmbeddingVector::normalized(vec![0.0; EMBEDDING_DIM], "x").is_err());
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn cosine_dimension_mismatch_panics() {
        let short = EmbeddingVector { values: vec![1.0], source: "x".into() };
        cosine(&unit(0), &short);
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric(a in prop::collection::vec(-1.0f64..1.0, EMBEDDING_DIM),
                               b in prop::collection::vec(-1.0f64..1.0, EMBEDDING_DIM)) {
            prop_assume!(a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0));
            let a = EmbeddingVector::normalized(a, "p").unwrap();
            let b = EmbeddingVector::normalized(b, "p").unwrap();
            let ab = cosine(&a, &b);
            prop_assert!((-1.0..=1.0).contains(&ab));
            prop_assert!((ab - cosine(&b, &a)).abs() <= 1e-12);
        }
    }
}

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use lru::LruCache;
use parking_lot::Mutex;

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::fingerprint::{fingerprint, Fingerprint};

pub const DEFAULT_CACHE_CAPACITY: usize = 100_000;

/// Memoizes an inner provider by the fingerprint of each normalized input.
///
/// Hits are returned without calling the inner provider. With a spill
/// directory, vectors also persist as one CBOR file per fingerprint and are
/// reloaded on a memory miss.
pub struct CachedProvider<P> {
    inner: P,
    memory: Mutex<LruCache<Fingerprint, EmbeddingVector>>,
    spill: Option<PathBuf>,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self::with_capacity(inner, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(inner: P, capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        Self { inner, memory: Mutex::new(LruCache::new(capacity)), spill: None }
    }

    /// Enables on-disk spill under `dir/<provider tag>/`.
    pub fn with_spill_dir(mut self, dir: impl AsRef<Path>) -> Self {
        let tag: String = self
            .inner
            .tag()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        self.spill = Some(dir.as_ref().join(tag));
        self
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.memory.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn spill_path(&self, key: Fingerprint) -> Option<PathBuf> {
        self.spill.as_ref().map(|d| d.join(format!("{}.cbor", key.to_hex())))
    }

    fn load_spilled(&self, key: Fingerprint) -> Option<EmbeddingVector> {
        let bytes = fs::read(self.spill_path(key)?).ok()?;
        ciborium::from_reader(bytes.as_slice()).ok()
    }

    fn store_spilled(&self, key: Fingerprint, vector: &EmbeddingVector) {
        let Some(path) = self.spill_path(key) else { return };
        let mut buf = Vec::new();
        if ciborium::into_writer(vector, &mut buf).is_err() {
            return;
        }
        if let Some(dir) = path.parent() {
            if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(&path, buf)) {
                log::warn!("embedding cache spill to {} failed: {e}", path.display());
            }
        }
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn tag(&self) -> &str {
        self.inner.tag()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let keys: Vec<Fingerprint> = texts.iter().map(|t| fingerprint(t)).collect();
        let mut out: Vec<Option<EmbeddingVector>> = {
            let mut memory = self.memory.lock();
            keys.iter().map(|k| memory.get(k).cloned()).collect()
        };
        for (slot, key) in out.iter_mut().zip(&keys) {
            if slot.is_none() {
                *slot = self.load_spilled(*key);
            }
        }

        // Compute each missing fingerprint once, even if repeated in the batch.
        let mut missing: Vec<usize> = Vec::new();
        for (i, slot) in out.iter().enumerate() {
            if slot.is_none() && !missing.iter().any(|&j| keys[j] == keys[i]) {
                missing.push(i);
            }
        }
        let computed = if missing.is_empty() {
            Vec::new()
        } else {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            self.inner.embed(&batch).map_err(|e| match e {
                EmbedError::EmptyInput { index } => EmbedError::EmptyInput { index: missing[index] },
                other => other,
            })?
        };
        for (&i, vector) in missing.iter().zip(&computed) {
            self.store_spilled(keys[i], vector);
        }

        let mut memory = self.memory.lock();
        for (&i, vector) in missing.iter().zip(computed) {
            memory.put(keys[i], vector);
        }
        out.into_iter()
            .zip(&keys)
            .map(|(slot, key)| match slot {
                Some(v) => {
                    memory.put(*key, v.clone());
                    Ok(v)
                }
                None => Ok(memory.get(key).cloned().expect("computed above")),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::embedding::{contract, LocalHashProvider};

    #[derive(Default)]
    struct Counting {
        calls: AtomicUsize,
        texts: AtomicUsize,
    }

    impl EmbeddingProvider for Counting {
        fn tag(&self) -> &str {
            "counting"
        }

        fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            LocalHashProvider.embed(texts)
        }
    }

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn satisfies_contract() {
        contract::check(&CachedProvider::new(LocalHashProvider));
    }

    #[test]
    fn transparent_and_memoizing() {
        let cached = CachedProvider::new(Counting::default());
        let texts = strings(&["a = 1", "b = 2", " a =  1", "c()"]);
        let first = cached.embed(&texts).unwrap();
        assert_eq!(first, LocalHashProvider.embed(&texts).unwrap());
        assert_eq!(cached.inner().texts.load(Ordering::SeqCst), 3, "normalized duplicates embed once");
        let second = cached.embed(&texts).unwrap();
        assert_eq!(first, second);
        assert_eq!(cached.inner().calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn evicts_least_recently_used() {
        let cached = CachedProvider::with_capacity(Counting::default(), 2);
        cached.embed(&strings(&["x"])).unwrap();
        cached.embed(&strings(&["y"])).unwrap();
        cached.embed(&strings(&["x"])).unwrap();
        cached.embed(&strings(&["z"])).unwrap(); // evicts y
        assert_eq!(cached.len(), 2);
        let before = cached.inner().texts.load(Ordering::SeqCst);
        cached.embed(&strings(&["x"])).unwrap();
        assert_eq!(cached.inner().texts.load(Ordering::SeqCst), before);
        cached.embed(&strings(&["y"])).unwrap();
        assert_eq!(cached.inner().texts.load(Ordering::SeqCst), before + 1);
    }

    #[test]
    fn spill_survives_new_instance() {
        let dir = tempfile::tempdir().unwrap();
        let texts = strings(&["def f(): pass"]);
        let first = CachedProvider::new(Counting::default()).with_spill_dir(dir.path());
        let v1 = first.embed(&texts).unwrap();
        let second = CachedProvider::new(Counting::default()).with_spill_dir(dir.path());
        let v2 = second.embed(&texts).unwrap();
        assert_eq!(v1, v2);
        assert_eq!(second.inner().calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn error_index_maps_to_caller_batch() {
        let cached = CachedProvider::new(LocalHashProvider);
        cached.embed(&strings(&["a"])).unwrap();
        let err = cached.embed(&strings(&["a", "b", "  "])).unwrap_err();
        assert!(matches!(err, EmbedError::EmptyInput { index: 2 }));
    }

    #[test]
    fn concurrent_use() {
        let cached = std::sync::Arc::new(CachedProvider::new(LocalHashProvider));
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let c = cached.clone();
                std::thread::spawn(move || {
                    let texts: Vec<String> = (0..50).map(|i| format!("v{} = {}", i % 10, t)).collect();
                    c.embed(&texts).unwrap()
                })
            })
            .collect();
        for h in handles {
            for v in h.join().unwrap() {
                assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }
    }
}

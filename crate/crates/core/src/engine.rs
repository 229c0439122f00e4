//! Retrieval, import resolution and prompt assembly for one request.

use serde::Serialize;

use crate::config::{EmbeddingConfig, EngineConfig, ProviderKind};
use crate::eaid::{extract_imports, render_pe, resolve_imports, PeSection};
use crate::embedding::{CachedProvider, EmbedError, EmbeddingProvider, LocalHashProvider, RemoteProvider};
use crate::hf_op::{run_pipeline, Query};
use crate::lexical::Candidate;
use crate::prompt::{assemble, BudgetExhausted, PromptBundle, PromptSnippet};
use crate::store::SnippetStore;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

/// Builds the embedding provider named by the config, wrapped in a cache.
pub fn build_provider(config: &EmbeddingConfig) -> Box<dyn EmbeddingProvider> {
    fn cached<P: EmbeddingProvider + 'static>(inner: P, config: &EmbeddingConfig) -> Box<dyn EmbeddingProvider> {
        let cache = CachedProvider::with_capacity(inner, config.cache_capacity);
        match &config.spill_dir {
            Some(dir) => Box::new(cache.with_spill_dir(dir)),
            None => Box::new(cache),
        }
    }
    match (config.provider, &config.endpoint) {
        (ProviderKind::Remote, Some(endpoint)) => cached(RemoteProvider::new(endpoint), config),
        _ => cached(LocalHashProvider, config),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Retrieval {
    pub candidates: Vec<Candidate>,
    pub pe: PeSection,
    pub prompt: PromptBundle,
}

pub struct Engine {
    store: SnippetStore,
    provider: Box<dyn EmbeddingProvider>,
    config: EngineConfig,
}

impl Engine {
    pub fn new(store: SnippetStore, provider: Box<dyn EmbeddingProvider>, config: EngineConfig) -> Self {
        Self { store, provider, config }
    }

    pub fn store(&self) -> &SnippetStore {
        &self.store
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Ranks candidates for `context` (the unfinished file at repository
    /// path `file`) and assembles the prompt.
    pub fn retrieve(&self, context: &str, file: &str) -> Result<Retrieval, EngineError> {
        let c = &self.config;
        let query = Query::from_context(context, c.language, file, c.hops, c.window);
        let candidates = run_pipeline(&query, &self.store, self.provider.as_ref(), &c.pipeline)?;

        let prefix = c.language.comment_prefix();
        let pe = if c.eaid {
            let imports = extract_imports(context);
            let resolution = resolve_imports(&imports, file, self.store.symbols());
            render_pe(&imports, &resolution, prefix)
        } else {
            PeSection { comment_prefix: prefix.to_string(), ..Default::default() }
        };

        let snippets: Vec<PromptSnippet> = candidates
            .iter()
            .filter_map(|cand| {
                let r = self.store.get(&cand.snippet_id)?;
                Some(PromptSnippet { id: r.id.clone(), file: r.file.clone(), text: r.text.clone(), score: cand.score() })
            })
            .collect();
        let prompt = assemble(&snippets, &pe, context, c.budget, c.language)?;
        Ok(Retrieval { candidates, pe, prompt })
    }
}

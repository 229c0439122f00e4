//! Embed snippets with the local provider behind a cache, or with a remote
//! service when `EMBED_URL` is set.
//!
//!     cargo run --example embedding_cache
//!     EMBED_URL=http://127.0.0.1:8080 cargo run --example embedding_cache

use saracoder::embedding::{cosine, CachedProvider, EmbeddingProvider, LocalHashProvider, RemoteProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts: Vec<String> =
        ["total = total + price", "total += price", "print('done')"].iter().map(|s| s.to_string()).collect();

    let spill = tempfile::tempdir()?;
    let provider: Box<dyn EmbeddingProvider> = match std::env::var("EMBED_URL") {
        Ok(url) => {
            let remote = RemoteProvider::new(&url);
            println!("health: {:?}", remote.health()?);
            Box::new(CachedProvider::new(remote).with_spill_dir(spill.path()))
        }
        Err(_) => Box::new(CachedProvider::new(LocalHashProvider).with_spill_dir(spill.path())),
    };
    println!("provider {}", provider.tag());

    let vectors = provider.embed(&texts)?;
    for (i, a) in texts.iter().enumerate() {
        for (j, b) in texts.iter().enumerate().skip(i + 1) {
            println!("cos({a:?}, {b:?}) = {:.3}", cosine(&vectors[i], &vectors[j]));
        }
    }
    // second call is served from the cache
    assert_eq!(provider.embed(&texts)?, vectors);
    Ok(())
}

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use futures::stream::{self, StreamExt, TryStreamExt};

use super::{sha256_hex, DiskCache, EmbeddingProvider, EmbeddingRequest, EmbeddingResponse, ProviderError};
use crate::vector::normalize;

pub const DEFAULT_BATCH_SIZE: usize = 256;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// Batching, normalizing and caching front end for an [`EmbeddingProvider`].
///
/// Cached vectors are the normalized provider output, so a cache hit returns
/// exactly what a fresh call would have.
pub struct EmbeddingClient {
    provider: Arc<dyn EmbeddingProvider>,
    batch_size: usize,
    max_in_flight: usize,
    memory: RwLock<HashMap<String, Arc<Vec<f64>>>>,
    disk: Option<DiskCache>,
    provider_calls: AtomicUsize,
}

impl EmbeddingClient {
    pub fn new(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self {
            provider,
            batch_size: DEFAULT_BATCH_SIZE,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            memory: RwLock::new(HashMap::new()),
            disk: None,
            provider_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    pub fn with_disk_cache(mut self, cache: DiskCache) -> Self {
        self.disk = Some(cache);
        self
    }

    /// Number of batch calls made to the underlying provider.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    fn key(&self, text: &str) -> String {
        sha256_hex(&[b"embed", self.provider.model().as_bytes(), text.as_bytes()])
    }

    fn lookup(&self, key: &str) -> Option<Arc<Vec<f64>>> {
        if let Some(v) = self.memory.read().expect("embedding cache poisoned").get(key) {
            return Some(v.clone());
        }
        let disk = self.disk.as_ref()?;
        let v: Vec<f64> = serde_json::from_str(&disk.get(key)?).ok()?;
        let v = Arc::new(v);
        self.memory
            .write()
            .expect("embedding cache poisoned")
            .insert(key.to_string(), v.clone());
        Some(v)
    }

    fn store(&self, key: String, v: Arc<Vec<f64>>) {
        if let Some(disk) = &self.disk {
            if let Ok(json) = serde_json::to_string(v.as_ref()) {
                if let Err(e) = disk.put(&key, &json) {
                    tracing::warn!(error = %e, "failed to write embedding cache entry");
                }
            }
        }
        self.memory.write().expect("embedding cache poisoned").insert(key, v);
    }

    async fn fetch_batch(&self, batch: Vec<String>) -> Result<Vec<(String, Vec<f64>)>, ProviderError> {
        self.provider_calls.fetch_add(1, Ordering::SeqCst);
        let vectors = self.provider.embed_batch(&batch).await?;
        if vectors.len() != batch.len() {
            return Err(ProviderError::Malformed(format!(
                "requested {} embeddings, received {}",
                batch.len(),
                vectors.len()
            )));
        }
        batch
            .into_iter()
            .zip(vectors)
            .map(|(text, mut v)| {
                if normalize(&mut v) {
                    Ok((text, v))
                } else {
                    Err(ProviderError::Malformed(format!(
                        "embedding for {text:?} cannot be normalized"
                    )))
                }
            })
            .collect()
    }

    pub async fn embed(&self, request: &EmbeddingRequest) -> Result<EmbeddingResponse, ProviderError> {
        let keys: Vec<String> = request.texts.iter().map(|t| self.key(t)).collect();
        let mut misses: Vec<String> = Vec::new();
        let mut pending = std::collections::HashSet::new();
        for (text, key) in request.texts.iter().zip(&keys) {
            if self.lookup(key).is_none() && pending.insert(key.clone()) {
                misses.push(text.clone());
            }
        }

        let batches: Vec<Vec<String>> = misses.chunks(self.batch_size).map(<[String]>::to_vec).collect();
        let fetched: Vec<Vec<(String, Vec<f64>)>> = stream::iter(batches)
            .map(|batch| self.fetch_batch(batch))
            .buffered(self.max_in_flight)
            .try_collect()
            .await?;
        for (text, v) in fetched.into_iter().flatten() {
            self.store(self.key(&text), Arc::new(v));
        }

        let vectors: Vec<Vec<f64>> = keys
            .iter()
            .map(|k| {
                self.lookup(k)
                    .map(|v| v.as_ref().clone())
                    .ok_or_else(|| ProviderError::Malformed("embedding missing after fetch".into()))
            })
            .collect::<Result<_, _>>()?;
        let dimension = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dimension) {
            return Err(ProviderError::Malformed("embeddings have mixed dimensions".into()));
        }
        Ok(EmbeddingResponse { vectors, dimension })
    }

    pub async fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(self
            .embed(&EmbeddingRequest {
                texts: texts.to_vec(),
            })
            .await?
            .vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::HashEmbedder;
    use crate::vector::{cosine_distance, norm};

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("prompt number {i}")).collect()
    }

    #[tokio::test]
    async fn identical_texts_get_identical_vectors() {
        let client = EmbeddingClient::new(Arc::new(HashEmbedder::new(16, 1)));
        let v = client.embed_texts(&["x".into(), "x".into()]).await.unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(cosine_distance(&v[0], &v[1]), 0.0);
        assert_eq!(client.provider_calls(), 1);
    }

    #[tokio::test]
    async fn thousand_texts_in_batches_of_256() {
        let client = EmbeddingClient::new(Arc::new(HashEmbedder::new(8, 1))).with_batch_size(256);
        let out = client.embed(&EmbeddingRequest { texts: texts(1000) }).await.unwrap();
        assert_eq!(out.vectors.len(), 1000);
        assert_eq!(out.dimension, 8);
        assert_eq!(client.provider_calls(), 4);
        for v in &out.vectors {
            assert!((norm(v) - 1.0).abs() < 1e-6);
        }
    }

    #[tokio::test]
    async fn repeated_text_hits_cache() {
        let client = EmbeddingClient::new(Arc::new(HashEmbedder::new(8, 1)));
        let first = client.embed_texts(&texts(10)).await.unwrap();
        let calls = client.provider_calls();
        let second = client.embed_texts(&texts(10)).await.unwrap();
        assert_eq!(client.provider_calls(), calls);
        assert_eq!(first, second);
    }

    #[tokio::test]
    async fn disk_cache_survives_a_new_client() {
        let dir = tempfile::tempdir().unwrap();
        let a = EmbeddingClient::new(Arc::new(HashEmbedder::new(8, 1)))
            .with_disk_cache(DiskCache::new(dir.path()).unwrap());
        let va = a.embed_texts(&texts(3)).await.unwrap();
        let b = EmbeddingClient::new(Arc::new(HashEmbedder::new(8, 1)))
            .with_disk_cache(DiskCache::new(dir.path()).unwrap());
        let vb = b.embed_texts(&texts(3)).await.unwrap();
        assert_eq!(va, vb);
        assert_eq!(b.provider_calls(), 0);
    }

    #[tokio::test]
    async fn empty_request_makes_no_calls() {
        let client = EmbeddingClient::new(Arc::new(HashEmbedder::new(8, 1)));
        let out = client.embed(&EmbeddingRequest { texts: vec![] }).await.unwrap();
        assert!(out.vectors.is_empty());
        assert_eq!(client.provider_calls(), 0);
    }
}

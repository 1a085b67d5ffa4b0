use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use async_trait::async_trait;

use super::{sha256_hex, ChatProvider, ChatRequest, ChatResponse, ProviderError};

/// Directory of JSON blobs keyed by request hash.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    /// Writes through a temp file so readers never see a partial entry.
    pub fn put(&self, key: &str, value: &str) -> io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(value.as_bytes())?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

/// Chat provider wrapper that memoizes responses on disk.
pub struct CachedChat {
    inner: Arc<dyn ChatProvider>,
    cache: DiskCache,
}

impl CachedChat {
    pub fn new(inner: Arc<dyn ChatProvider>, cache: DiskCache) -> Self {
        Self { inner, cache }
    }

    fn key(request: &ChatRequest) -> String {
        sha256_hex(&[
            b"chat",
            request.model.as_bytes(),
            &request.temperature.to_le_bytes(),
            request.instruction.as_bytes(),
        ])
    }
}

#[async_trait]
impl ChatProvider for CachedChat {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = Self::key(request);
        if let Some(hit) = self.cache.get(&key).and_then(|s| serde_json::from_str(&s).ok()) {
            return Ok(hit);
        }
        let response = self.inner.chat(request).await?;
        if let Ok(json) = serde_json::to_string(&response) {
            if let Err(e) = self.cache.put(&key, &json) {
                tracing::warn!(error = %e, "failed to write chat cache entry");
            }
        }
        Ok(response)
    }
}

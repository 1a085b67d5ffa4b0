//! Clients for the three external capabilities the engine relies on: chat
//! completion, text embedding and image generation.
//!
//! Each capability is a trait so that the engine and session code run
//! unchanged against the HTTP clients in [`openai`] or the deterministic
//! doubles in [`mock`].

use std::collections::BTreeMap;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod cache;
pub mod embed;
pub mod mock;
pub mod openai;
pub mod retry;

pub use cache::{CachedChat, DiskCache};
pub use embed::EmbeddingClient;
pub use retry::RetryPolicy;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("provider timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("provider quota exceeded after {attempts} attempt(s){}", retry_after_note(*.retry_after_secs))]
    Quota {
        retry_after_secs: Option<u64>,
        attempts: u32,
    },
    #[error("provider returned HTTP {status} after {attempts} attempt(s): {body}")]
    Http { status: u16, body: String, attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("invalid provider request: {0}")]
    Validation(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("only {} of {requested} images were generated", .succeeded.len())]
    PartialResult {
        requested: usize,
        succeeded: Vec<GeneratedImage>,
    },
}

fn retry_after_note(secs: Option<u64>) -> String {
    secs.map(|s| format!(" (retry after {s}s)")).unwrap_or_default()
}

impl ProviderError {
    /// Errors worth retrying: timeouts, rate limits, 5xx and transport
    /// failures.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Timeout { .. } | ProviderError::Quota { .. } | ProviderError::Transport { .. } => true,
            ProviderError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }

    pub fn attempts(&self) -> u32 {
        match self {
            ProviderError::Timeout { attempts }
            | ProviderError::Quota { attempts, .. }
            | ProviderError::Http { attempts, .. }
            | ProviderError::Transport { attempts, .. } => *attempts,
            _ => 1,
        }
    }

    pub(crate) fn with_attempts(mut self, n: u32) -> Self {
        match &mut self {
            ProviderError::Timeout { attempts }
            | ProviderError::Quota { attempts, .. }
            | ProviderError::Http { attempts, .. }
            | ProviderError::Transport { attempts, .. } => *attempts = n,
            _ => {}
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub instruction: String,
    pub model: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    /// Unit-norm vectors, one per request text, all of `dimension` length.
    pub vectors: Vec<Vec<f64>>,
    pub dimension: usize,
}

/// Raw embedding backend. Vectors need not be normalized;
/// [`EmbeddingClient`] takes care of batching, normalization and caching.
#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the model in cache keys.
    fn model(&self) -> &str;

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

pub const IMAGES_PER_REQUEST: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub prompt: String,
    pub count: usize,
    pub size: String,
}

impl ImageRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            count: IMAGES_PER_REQUEST,
            size: "512x512".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedImage {
    pub uri: String,
    /// Echo of the generation parameters.
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResponse {
    pub images: Vec<GeneratedImage>,
}

#[async_trait]
pub trait ImageProvider: Send + Sync {
    async fn generate(&self, request: &ImageRequest) -> Result<ImageResponse, ProviderError>;
}

/// Validates the request, calls the provider and checks that every requested
/// image came back.
pub async fn generate_images(
    provider: &dyn ImageProvider,
    request: &ImageRequest,
) -> Result<ImageResponse, ProviderError> {
    if request.count == 0 {
        return Err(ProviderError::Validation("image count must be at least 1".into()));
    }
    if request.prompt.trim().is_empty() {
        return Err(ProviderError::Validation("image prompt is empty".into()));
    }
    let response = provider.generate(request).await?;
    if response.images.len() < request.count {
        return Err(ProviderError::PartialResult {
            requested: request.count,
            succeeded: response.images,
        });
    }
    Ok(response)
}

pub(crate) fn sha256_hex(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    hex::encode(hasher.finalize())
}

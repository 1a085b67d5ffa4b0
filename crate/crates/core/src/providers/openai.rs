//! HTTP clients for OpenAI-compatible chat, embedding and image endpoints.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use super::{
    ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, GeneratedImage, ImageProvider, ImageRequest,
    ImageResponse, ProviderError, RetryPolicy,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpProviderConfig {
    pub base_url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            model: String::new(),
            timeout_secs: 120,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

struct HttpClient {
    http: reqwest::Client,
    config: HttpProviderConfig,
    permits: Arc<Semaphore>,
}

impl HttpClient {
    fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Validation(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            http,
            permits: Arc::new(Semaphore::new(config.max_in_flight.max(1))),
            config,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.base_url.trim_end_matches('/'), path)
    }

    async fn post_once<T: DeserializeOwned>(&self, path: &str, body: &serde_json::Value) -> Result<T, ProviderError> {
        let mut req = self.http.post(self.url(path)).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(send_error)?;
        let status = resp.status();
        if status.is_success() {
            return resp
                .json::<T>()
                .await
                .map_err(|e| ProviderError::Malformed(e.to_string()));
        }
        let retry_after_secs = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok());
        let body = resp.text().await.unwrap_or_default();
        Err(match status.as_u16() {
            429 => ProviderError::Quota {
                retry_after_secs,
                attempts: 1,
            },
            408 => ProviderError::Timeout { attempts: 1 },
            code => ProviderError::Http {
                status: code,
                body,
                attempts: 1,
            },
        })
    }

    async fn post<T: DeserializeOwned>(&self, path: &str, body: serde_json::Value) -> Result<T, ProviderError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        self.config.retry.run(|| self.post_once(path, &body)).await
    }
}

fn send_error(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout { attempts: 1 }
    } else {
        ProviderError::Transport {
            message: e.to_string(),
            attempts: 1,
        }
    }
}

pub struct OpenAiChat {
    client: HttpClient,
}

impl OpenAiChat {
    pub fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: HttpClient::new(config)?,
        })
    }
}

#[derive(Deserialize)]
struct ChatCompletion {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u32,
    #[serde(default)]
    completion_tokens: u32,
}

#[async_trait]
impl ChatProvider for OpenAiChat {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.instruction}],
        });
        let completion: ChatCompletion = self.client.post("chat/completions", body).await?;
        let text = completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| ProviderError::Malformed("chat response has no content".into()))?;
        let usage = completion.usage.unwrap_or_default();
        Ok(ChatResponse {
            text,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

pub struct OpenAiEmbeddings {
    client: HttpClient,
}

impl OpenAiEmbeddings {
    pub fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: HttpClient::new(config)?,
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingList {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    #[serde(default)]
    index: usize,
    embedding: Vec<f64>,
}

#[async_trait]
impl EmbeddingProvider for OpenAiEmbeddings {
    fn model(&self) -> &str {
        &self.client.config.model
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let body = json!({"model": self.client.config.model, "input": texts});
        let mut list: EmbeddingList = self.client.post("embeddings", body).await?;
        list.data.sort_by_key(|d| d.index);
        Ok(list.data.into_iter().map(|d| d.embedding).collect())
    }
}

pub struct OpenAiImages {
    client: HttpClient,
}

impl OpenAiImages {
    pub fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            client: HttpClient::new(config)?,
        })
    }
}

#[derive(Deserialize)]
struct ImageList {
    data: Vec<ImageItem>,
}

#[derive(Deserialize)]
struct ImageItem {
    #[serde(default)]
    url: Option<String>,
}

#[async_trait]
impl ImageProvider for OpenAiImages {
    async fn generate(&self, request: &ImageRequest) -> Result<ImageResponse, ProviderError> {
        if request.count == 0 {
            return Err(ProviderError::Validation("image count must be at least 1".into()));
        }
        let body = json!({
            "model": self.client.config.model,
            "prompt": request.prompt,
            "n": request.count,
            "size": request.size,
            "response_format": "url",
        });
        let list: ImageList = self.client.post("images/generations", body).await?;
        let images = list
            .data
            .into_iter()
            .filter_map(|item| item.url)
            .enumerate()
            .map(|(i, uri)| {
                let mut meta = BTreeMap::new();
                meta.insert("provider".into(), "openai".into());
                meta.insert("model".into(), self.client.config.model.clone());
                meta.insert("size".into(), request.size.clone());
                meta.insert("index".into(), i.to_string());
                GeneratedImage { uri, meta }
            })
            .collect();
        Ok(ImageResponse { images })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use axum::extract::State;
    use axum::http::{HeaderMap, StatusCode};
    use axum::response::IntoResponse;
    use axum::routing::post;
    use axum::{Json, Router};

    use super::*;
    use crate::providers::generate_images;

    async fn serve(router: Router) -> String {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
        format!("http://{addr}/v1")
    }

    fn config(base_url: String) -> HttpProviderConfig {
        HttpProviderConfig {
            base_url,
            api_key: Some("test-key".into()),
            model: "test-model".into(),
            timeout_secs: 5,
            max_in_flight: 2,
            retry: RetryPolicy::no_delay(3),
        }
    }

    #[tokio::test]
    async fn chat_parses_completion() {
        let router = Router::new().route(
            "/v1/chat/completions",
            post(|headers: HeaderMap, Json(body): Json<serde_json::Value>| async move {
                assert_eq!(headers["authorization"], "Bearer test-key");
                let echo = body["messages"][0]["content"].as_str().unwrap().to_uppercase();
                Json(json!({
                    "choices": [{"message": {"role": "assistant", "content": echo}}],
                    "usage": {"prompt_tokens": 3, "completion_tokens": 4}
                }))
            }),
        );
        let chat = OpenAiChat::new(config(serve(router).await)).unwrap();
        let resp = chat
            .chat(&ChatRequest {
                instruction: "owl".into(),
                model: "test-model".into(),
                temperature: 1.0,
            })
            .await
            .unwrap();
        assert_eq!(resp.text, "OWL");
        assert_eq!((resp.prompt_tokens, resp.completion_tokens), (3, 4));
    }

    #[tokio::test]
    async fn rate_limit_surfaces_quota_error_after_three_attempts() {
        let hits = Arc::new(AtomicUsize::new(0));
        let router = Router::new()
            .route(
                "/v1/chat/completions",
                post(|State(hits): State<Arc<AtomicUsize>>| async move {
                    hits.fetch_add(1, Ordering::SeqCst);
                    (StatusCode::TOO_MANY_REQUESTS, [("retry-after", "0")], "slow down").into_response()
                }),
            )
            .with_state(hits.clone());
        let chat = OpenAiChat::new(config(serve(router).await)).unwrap();
        let err = chat
            .chat(&ChatRequest {
                instruction: "x".into(),
                model: "m".into(),
                temperature: 1.0,
            })
            .await
            .unwrap_err();
        assert_eq!(
            err,
            ProviderError::Quota {
                retry_after_secs: Some(0),
                attempts: 3
            }
        );
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[tokio::test]
    async fn embeddings_are_reordered_by_index() {
        let router = Router::new().route(
            "/v1/embeddings",
            post(|| async {
                Json(json!({"data": [
                    {"index": 1, "embedding": [0.0, 2.0]},
                    {"index": 0, "embedding": [3.0, 0.0]}
                ]}))
            }),
        );
        let emb = OpenAiEmbeddings::new(config(serve(router).await)).unwrap();
        let out = emb.embed_batch(&["a".into(), "b".into()]).await.unwrap();
        assert_eq!(out, vec![vec![3.0, 0.0], vec![0.0, 2.0]]);
    }

    #[tokio::test]
    async fn partial_image_result_lists_successes() {
        let router = Router::new().route(
            "/v1/images/generations",
            post(|| async {
                Json(json!({"data": [
                    {"url": "https://img/0.png"},
                    {"url": "https://img/1.png"},
                    {"url": "https://img/2.png"}
                ]}))
            }),
        );
        let images = OpenAiImages::new(config(serve(router).await)).unwrap();
        match generate_images(&images, &ImageRequest::new("a fox")).await {
            Err(ProviderError::PartialResult { requested, succeeded }) => {
                assert_eq!(requested, 4);
                let uris: Vec<_> = succeeded.iter().map(|i| i.uri.as_str()).collect();
                assert_eq!(uris, ["https://img/0.png", "https://img/1.png", "https://img/2.png"]);
            }
            other => panic!("expected partial result, got {other:?}"),
        }
    }

    #[tokio::test]
    async fn server_errors_are_retried_then_reported() {
        let router = Router::new().route(
            "/v1/embeddings",
            post(|| async { (StatusCode::BAD_GATEWAY, "upstream").into_response() }),
        );
        let emb = OpenAiEmbeddings::new(config(serve(router).await)).unwrap();
        let err = emb.embed_batch(&["a".into()]).await.unwrap_err();
        assert!(matches!(err, ProviderError::Http { status: 502, attempts: 3, .. }), "{err:?}");
    }
}

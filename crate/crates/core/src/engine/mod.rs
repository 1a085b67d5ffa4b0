//! Candidate generation, novelty filtering, clustering and replacement.
//!
//! [`Engine::expand`] runs the whole pipeline for one request:
//!
//! 1. fill the instruction template for the request's mode,
//! 2. ask the chat provider for rewrites of the selected span,
//! 3. splice each rewrite into the prompt and embed the results,
//! 4. keep candidates whose distance from the origin falls inside the
//!    novelty band,
//! 5. cluster the survivors into four groups and surface the member nearest
//!    each centroid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::providers::{ChatProvider, ChatRequest, EmbeddingClient, ProviderError};
use crate::vector::cosine_distance;

pub mod cluster;
pub mod filter;
pub mod parse;
pub mod replace;
pub mod template;
pub mod types;

pub use cluster::{cluster_candidates, kmeans, select_representatives, Clustering, Selection};
pub use filter::{novelty_filter, select_band, BandConfig, BandSelection, FilterOutcome};
pub use parse::{parse_candidates, splice};
pub use replace::{select_replacement, select_replacement_by};
pub use template::build_generation_prompt;
pub use types::{
    char_len, char_slice, BandSpace, Candidate, ExpansionMode, ExpansionRequest, SpanSelection, SuggestionSet,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid expansion request: {0}")]
    InvalidRequest(String),
    #[error("no usable candidates")]
    EmptyPool,
    #[error("no eligible replacement left in the candidate pool")]
    PoolExhausted,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub candidate_target: usize,
    pub k: usize,
    pub band_halfwidth: f64,
    pub widen_step: f64,
    pub max_kmeans_iters: usize,
    pub band_space: BandSpace,
    pub chat_model: String,
    pub temperature: f64,
    /// Forces every expansion to use this seed.
    pub seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            candidate_target: 200,
            k: 4,
            band_halfwidth: 0.2,
            widen_step: 0.1,
            max_kmeans_iters: 100,
            band_space: BandSpace::Distance,
            chat_model: "gpt-4o".into(),
            temperature: 1.0,
            seed: None,
        }
    }
}

impl EngineConfig {
    pub fn band(&self) -> BandConfig {
        BandConfig {
            halfwidth: self.band_halfwidth,
            widen_step: self.widen_step,
            min_retained: self.k,
            space: self.band_space,
        }
    }
}

/// Origin distance as stored on candidates: cosine distance clamped to `[0, 1]`.
pub fn origin_distance(embedding: &[f64], origin: &[f64]) -> f64 {
    cosine_distance(embedding, origin).clamp(0.0, 1.0)
}

/// Filters an embedded pool into the novelty band and picks representatives.
/// This is everything after the provider calls; it is pure.
pub fn select_suggestions(
    request: &ExpansionRequest,
    pool: &[Candidate],
    config: &EngineConfig,
    seed: u64,
) -> Result<SuggestionSet, EngineError> {
    let filtered = novelty_filter(pool, request.novelty, &config.band())?;
    let selection = cluster_candidates(&filtered.retained, config.k, config.max_kmeans_iters, seed);
    Ok(SuggestionSet {
        request: request.clone(),
        rng_seed: seed,
        band_halfwidth: filtered.halfwidth,
        suggestions: selection.representatives,
        cluster_assignments: selection.assignments,
        retained_pool: filtered.retained,
    })
}

pub struct Engine {
    config: EngineConfig,
    chat: Arc<dyn ChatProvider>,
    embedder: Arc<EmbeddingClient>,
}

impl Engine {
    pub fn new(config: EngineConfig, chat: Arc<dyn ChatProvider>, embedder: Arc<EmbeddingClient>) -> Self {
        Self { config, chat, embedder }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn embedder(&self) -> &Arc<EmbeddingClient> {
        &self.embedder
    }

    /// Generates, embeds and scores the candidate pool for `request`.
    pub async fn candidate_pool(&self, request: &ExpansionRequest) -> Result<Vec<Candidate>, EngineError> {
        request.validate()?;
        let response = self
            .chat
            .chat(&ChatRequest {
                instruction: build_generation_prompt(request),
                model: self.config.chat_model.clone(),
                temperature: self.config.temperature,
            })
            .await?;
        let mut rewrites = parse_candidates(&response.text)?;
        if rewrites.len() < self.config.candidate_target {
            tracing::warn!(
                got = rewrites.len(),
                target = self.config.candidate_target,
                "candidate pool is short"
            );
        }
        rewrites.truncate(self.config.candidate_target);

        let mut texts = Vec::with_capacity(rewrites.len() + 1);
        texts.push(request.origin_prompt.clone());
        texts.extend(rewrites.iter().map(|r| splice(&request.origin_prompt, &request.span, r)));
        let mut vectors = self.embedder.embed_texts(&texts).await?.into_iter();
        let origin = vectors.next().ok_or(EngineError::EmptyPool)?;

        Ok(rewrites
            .into_iter()
            .zip(texts.into_iter().skip(1))
            .zip(vectors)
            .map(|((span_text, full_prompt), embedding)| Candidate {
                origin_distance: origin_distance(&embedding, &origin),
                span_text,
                full_prompt,
                embedding,
            })
            .collect())
    }

    pub async fn expand(&self, request: &ExpansionRequest, seed: u64) -> Result<SuggestionSet, EngineError> {
        let seed = self.config.seed.unwrap_or(seed);
        let pool = self.candidate_pool(request).await?;
        select_suggestions(request, &pool, &self.config, seed)
    }
}

//! The exploration loop over one session document, independent of
//! transport. Both the HTTP routes and the CLI drive sessions through here.

use std::path::Path;
use std::sync::Arc;

use ideaspan_core::metrics::{diversity_report, DiversityReport};
use ideaspan_core::providers::mock::{HashEmbedder, MockChat, MockImages};
use ideaspan_core::providers::openai::{OpenAiChat, OpenAiEmbeddings, OpenAiImages};
use ideaspan_core::providers::{
    generate_images, CachedChat, ChatProvider, DiskCache, EmbeddingClient, ImageProvider, ImageRequest,
};
use ideaspan_core::session::{Clock, GraphNode, ImageRef, LogicalClock, NodeKind, SystemClock};
use ideaspan_core::{Engine, ExpansionMode, ExpansionRequest, Lexicon, NodeId, Session};
use tracing::info;

use crate::config::Config;
use crate::error::{ApiError, ErrorCode};

/// Derives a child seed; splitmix64 finalizer over the combined words.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Explorer {
    engine: Engine,
    images: Arc<dyn ImageProvider>,
    lexicon: Arc<Lexicon>,
    clock: Arc<dyn Clock>,
    seed: Option<u64>,
}

impl Explorer {
    pub fn new(
        engine: Engine,
        images: Arc<dyn ImageProvider>,
        lexicon: Arc<Lexicon>,
        clock: Arc<dyn Clock>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            engine,
            images,
            lexicon,
            clock,
            seed,
        }
    }

    /// Wires providers from `config`. Mock images are written under
    /// `image_dir` and referenced as `uri_prefix` + file name.
    pub fn from_config(config: &Config, image_dir: &Path, uri_prefix: &str) -> Result<Self, ApiError> {
        let lexicon = Arc::new(load_lexicon(config)?);
        let clock: Arc<dyn Clock> = match config.seed {
            Some(_) => Arc::new(LogicalClock::default()),
            None => Arc::new(SystemClock),
        };
        let p = &config.providers;
        let (chat, embedder, images): (Arc<dyn ChatProvider>, EmbeddingClient, Arc<dyn ImageProvider>) =
            if config.mock {
                let seed = config.seed.unwrap_or(0);
                (
                    Arc::new(MockChat::new(seed).with_synth_count(config.engine.candidate_target)),
                    EmbeddingClient::new(Arc::new(HashEmbedder::new(config.mock_embedding_dim, seed))),
                    Arc::new(MockImages::new(seed, image_dir, uri_prefix)),
                )
            } else {
                let mut chat: Arc<dyn ChatProvider> = Arc::new(OpenAiChat::new(p.chat.clone())?);
                let mut embedder = EmbeddingClient::new(Arc::new(OpenAiEmbeddings::new(p.embeddings.clone())?))
                    .with_batch_size(p.embedding_batch_size)
                    .with_max_in_flight(p.embeddings.max_in_flight);
                if let Some(dir) = &p.cache_dir {
                    let cache = |sub: &str| {
                        DiskCache::new(dir.join(sub))
                            .map_err(|e| ApiError::validation(format!("cache dir {}: {e}", dir.display())))
                    };
                    chat = Arc::new(CachedChat::new(chat, cache("chat")?));
                    embedder = embedder.with_disk_cache(cache("embeddings")?);
                }
                (chat, embedder, Arc::new(OpenAiImages::new(p.images.clone())?))
            };
        let engine = Engine::new(config.engine.clone(), chat, Arc::new(embedder));
        Ok(Self::new(engine, images, lexicon, clock, config.seed))
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// A fresh session id. With a fixed seed the id depends only on `nonce`.
    pub fn session_id(&self, nonce: u64) -> String {
        let raw = match self.seed {
            Some(seed) => mix_seed(seed, nonce),
            None => rand::random(),
        };
        format!("{raw:016x}")
    }

    pub fn create(&self, session_id: String, prompt: &str) -> Result<Session, ApiError> {
        Ok(Session::create(session_id, prompt, &self.lexicon, self.clock.as_ref())?)
    }

    fn expansion_seed(&self, node: &GraphNode) -> u64 {
        match self.seed {
            Some(seed) => mix_seed(mix_seed(seed, node.id.0), node.expansions.len() as u64),
            None => rand::random(),
        }
    }

    /// Generates and attaches four suggestions for a span of `node`.
    pub async fn expand(
        &self,
        session: &mut Session,
        node: NodeId,
        char_start: usize,
        char_end: usize,
        mode: ExpansionMode,
        novelty: f64,
    ) -> Result<Vec<NodeId>, ApiError> {
        let parent = session.node(node)?;
        // Checked up front so a doomed request costs no provider calls.
        if parent.removed {
            return Err(ApiError::new(ErrorCode::InvalidState, format!("node {node} was removed")));
        }
        if parent.kind == NodeKind::Suggestion {
            return Err(ApiError::new(
                ErrorCode::InvalidState,
                format!("node {node} is a suggestion; branch it before expanding"),
            ));
        }
        let request = ExpansionRequest::new(parent.prompt_text.clone(), char_start, char_end, mode, novelty)?;
        let seed = self.expansion_seed(parent);
        let set = self.engine.expand(&request, seed).await?;
        info!(%node, retained = set.retained_pool.len(), halfwidth = set.band_halfwidth, "expanded");
        Ok(session.attach_suggestions(node, set, self.clock.as_ref())?)
    }

    /// Calls the image provider for `prompt`; nothing is attached.
    pub async fn render(&self, prompt: &str) -> Result<Vec<ImageRef>, ApiError> {
        let response = generate_images(self.images.as_ref(), &ImageRequest::new(prompt)).await?;
        Ok(response
            .images
            .into_iter()
            .map(|i| ImageRef {
                uri: i.uri,
                provider_meta: i.meta,
            })
            .collect())
    }

    /// Generates and attaches images in one step.
    pub async fn images(&self, session: &mut Session, node: NodeId) -> Result<Vec<ImageRef>, ApiError> {
        let n = session.node(node)?;
        if n.removed {
            return Err(ApiError::new(ErrorCode::InvalidState, format!("node {node} was removed")));
        }
        let prompt = n.prompt_text.clone();
        let images = self.render(&prompt).await?;
        session.attach_images(node, images.clone(), self.clock.as_ref())?;
        Ok(images)
    }

    /// Removes a suggestion and attaches its replacement. On
    /// `pool_exhausted` the session is still modified (the node is removed).
    pub fn reject(&self, session: &mut Session, node: NodeId) -> Result<NodeId, ApiError> {
        Ok(session.remove_suggestion(node, self.clock.as_ref())?)
    }

    pub fn branch(&self, session: &mut Session, node: NodeId) -> Result<NodeId, ApiError> {
        Ok(session.promote_to_branch(node, &self.lexicon)?)
    }

    /// Diversity of the prompts images were generated for, with distances
    /// measured from the root prompt.
    pub async fn metrics(&self, session: &Session) -> Result<DiversityReport, ApiError> {
        let prompts: Vec<String> = session.list_tried_prompts().into_iter().map(String::from).collect();
        Ok(diversity_report(&prompts, Some(&session.root().prompt_text), self.engine.embedder()).await?)
    }
}

fn load_lexicon(config: &Config) -> Result<Lexicon, ApiError> {
    match &config.lexicon_path {
        Some(path) => {
            let (lexicon, report) = Lexicon::load_path(path)
                .map_err(|e| ApiError::validation(format!("lexicon {}: {e}", path.display())))?;
            info!(loaded = report.loaded, skipped = report.skipped_invalid + report.skipped_multiword, "lexicon loaded");
            Ok(lexicon)
        }
        None => {
            info!("no lexicon configured; every word is treated as unrated");
            Ok(Lexicon::new())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_seeds_differ_by_input() {
        let a = mix_seed(7, 0);
        assert_eq!(a, mix_seed(7, 0));
        assert_ne!(a, mix_seed(7, 1));
        assert_ne!(a, mix_seed(8, 0));
        assert_ne!(mix_seed(0, 0), 0);
    }

    #[tokio::test]
    async fn seeded_mock_explorer_is_repeatable() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config {
            mock: true,
            seed: Some(5),
            ..Config::default()
        };
        let run = || async {
            let ex = Explorer::from_config(&config, dir.path(), "images/").unwrap();
            let mut s = ex.create(ex.session_id(0), "a quiet harbor at dawn").unwrap();
            let kids = ex.expand(&mut s, NodeId(0), 2, 8, ExpansionMode::AddDetails, 0.5).await.unwrap();
            ex.images(&mut s, kids[0]).await.unwrap();
            s.to_document()
        };
        assert_eq!(run().await, run().await);
    }

    #[tokio::test]
    async fn expanding_a_suggestion_is_rejected_before_any_provider_call() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config {
            mock: true,
            seed: Some(1),
            ..Config::default()
        };
        let ex = Explorer::from_config(&config, dir.path(), "images/").unwrap();
        let mut s = ex.create(ex.session_id(0), "a red kite").unwrap();
        let kids = ex.expand(&mut s, NodeId(0), 2, 5, ExpansionMode::GenerateAlternatives, 0.3).await.unwrap();
        let err = ex.expand(&mut s, kids[0], 0, 1, ExpansionMode::AddDetails, 0.3).await.unwrap_err();
        assert_eq!(err.code, ErrorCode::InvalidState);
        assert_eq!(s.len(), 5);
    }
}

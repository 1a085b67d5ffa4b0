//! Deterministic offline providers. Every output is a pure function of the
//! request and the seed the mock was built with.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    sha256_hex, ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, GeneratedImage, ImageProvider,
    ImageRequest, ImageResponse, ProviderError,
};

fn seed_from(seed: u64, parts: &[&[u8]]) -> u64 {
    let seed_bytes = seed.to_le_bytes();
    let mut all: Vec<&[u8]> = Vec::with_capacity(parts.len() + 1);
    all.push(&seed_bytes);
    all.extend_from_slice(parts);
    let digest = sha256_hex(&all);
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

/// Key under which [`MockChat`] looks up a fixture for an instruction.
pub fn fixture_key(instruction: &str) -> String {
    sha256_hex(&[instruction.as_bytes()])
}

const ADJECTIVES: &[&str] = &[
    "tiny", "glowing", "ancient", "fluffy", "neon", "clockwork", "velvet", "crystal", "rusty", "floating",
    "gentle", "wild", "paper", "golden", "misty", "electric", "woolen", "marble", "sleepy", "cosmic",
    "tropical", "frozen", "painted", "brave", "hollow", "striped", "silent", "jade", "smoky", "bubbly",
];

const NOUNS: &[&str] = &[
    "fox", "robot", "lantern", "whale", "astronaut", "owl", "dragon", "teapot", "cactus", "violin",
    "octopus", "mushroom", "knight", "comet", "parrot", "lighthouse", "tiger", "balloon", "moth", "golem",
    "drummer", "wizard", "jellyfish", "sailor", "beetle", "chef", "unicorn", "panda", "satellite", "gardener",
];

const ATTACHMENTS: &[&str] = &[
    "with a feathered hat",
    "holding a map",
    "wearing headphones",
    "made of leaves",
    "with glass wings",
    "covered in stickers",
    "riding a bicycle",
    "under the rain",
];

/// Chat double. Registered fixtures are returned verbatim; any other
/// instruction gets a seeded list of distinct pseudo-candidates.
pub struct MockChat {
    seed: u64,
    synth_count: usize,
    fixtures: HashMap<String, String>,
    calls: AtomicUsize,
}

impl MockChat {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            synth_count: 200,
            fixtures: HashMap::new(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_synth_count(mut self, n: usize) -> Self {
        self.synth_count = n;
        self
    }

    pub fn with_fixture(mut self, instruction: &str, response: impl Into<String>) -> Self {
        self.fixtures.insert(fixture_key(instruction), response.into());
        self
    }

    /// Loads `<key>.txt` files, where `<key>` is [`fixture_key`] of the
    /// instruction they answer.
    pub fn with_fixture_dir(mut self, dir: impl AsRef<Path>) -> io::Result<Self> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    self.fixtures.insert(stem.to_string(), fs::read_to_string(&path)?);
                }
            }
        }
        Ok(self)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn synthesize(&self, instruction: &str) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from(self.seed, &[b"chat", instruction.as_bytes()]));
        let mut seen = HashSet::new();
        let mut lines = Vec::with_capacity(self.synth_count);
        let mut attempts = 0;
        while lines.len() < self.synth_count && attempts < self.synth_count * 50 {
            attempts += 1;
            let mut words: Vec<&str> = Vec::new();
            for _ in 0..rng.random_range(0..=2) {
                words.push(ADJECTIVES.choose(&mut rng).expect("non-empty"));
            }
            words.push(NOUNS.choose(&mut rng).expect("non-empty"));
            if rng.random_bool(0.35) {
                words.push(ATTACHMENTS.choose(&mut rng).expect("non-empty"));
            }
            let phrase = words.join(" ");
            if seen.insert(phrase.clone()) {
                lines.push(phrase);
            }
        }
        lines.join("\n")
    }
}

#[async_trait]
impl ChatProvider for MockChat {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = match self.fixtures.get(&fixture_key(&request.instruction)) {
            Some(t) => t.clone(),
            None => self.synthesize(&request.instruction),
        };
        Ok(ChatResponse {
            prompt_tokens: request.instruction.split_whitespace().count() as u32,
            completion_tokens: text.split_whitespace().count() as u32,
            text,
        })
    }
}

/// Bag-of-words hash embedding: each distinct lowercase word maps to a seeded
/// Gaussian direction with a seeded weight, and a text embeds to the weighted
/// sum. Identical texts embed identically and texts sharing words are close.
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
    model: String,
    calls: AtomicUsize,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            model: format!("hash-bow-{dim}-{seed}"),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn word_vector(&self, word: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_from(self.seed, &[b"word", word.as_bytes()]));
        let weight = rng.random_range(0.5..2.0);
        (0..self.dim)
            .map(|_| weight * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn raw_embedding(&self, text: &str) -> Vec<f64> {
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut v = vec![0.0; self.dim];
        if words.is_empty() {
            return self.word_vector(&format!("\u{0}{text}"));
        }
        for w in words {
            for (acc, x) in v.iter_mut().zip(self.word_vector(w)) {
                *acc += x;
            }
        }
        v
    }
}

#[async_trait]
impl EmbeddingProvider for HashEmbedder {
    fn model(&self) -> &str {
        &self.model
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(texts.iter().map(|t| self.raw_embedding(t)).collect())
    }
}

/// Embedder backed by an explicit text-to-vector table.
pub struct StaticEmbedder {
    table: HashMap<String, Vec<f64>>,
}

impl StaticEmbedder {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        Self {
            table: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[async_trait]
impl EmbeddingProvider for StaticEmbedder {
    fn model(&self) -> &str {
        "static"
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(t)
                    .cloned()
                    .ok_or_else(|| ProviderError::Validation(format!("no static embedding for {t:?}")))
            })
            .collect()
    }
}

/// Image double that writes small SVG placeholders. File names are derived
/// from the prompt, so the same request always yields the same locators.
pub struct MockImages {
    seed: u64,
    output_dir: PathBuf,
    uri_prefix: String,
}

impl MockImages {
    /// `uri_prefix` is prepended to each file name to form the returned
    /// locator, e.g. `"images/"` for locators relative to a session file.
    pub fn new(seed: u64, output_dir: impl Into<PathBuf>, uri_prefix: impl Into<String>) -> Self {
        Self {
            seed,
            output_dir: output_dir.into(),
            uri_prefix: uri_prefix.into(),
        }
    }

    pub fn output_dir(&self) -> &Path {
        &self.output_dir
    }

    /// Maps a locator returned by this provider back to its file.
    pub fn path_for(&self, uri: &str) -> PathBuf {
        self.output_dir.join(uri.strip_prefix(&self.uri_prefix).unwrap_or(uri))
    }

    fn placeholder(prompt: &str, hue: u32) -> String {
        let escaped = prompt
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"256\" height=\"256\">\
             <rect width=\"256\" height=\"256\" fill=\"hsl({hue},60%,70%)\"/>\
             <text x=\"8\" y=\"128\" font-size=\"10\">{escaped}</text></svg>\n"
        )
    }
}

#[async_trait]
impl ImageProvider for MockImages {
    async fn generate(&self, request: &ImageRequest) -> Result<ImageResponse, ProviderError> {
        if request.count == 0 {
            return Err(ProviderError::Validation("image count must be at least 1".into()));
        }
        fs::create_dir_all(&self.output_dir).map_err(|e| ProviderError::Transport {
            message: e.to_string(),
            attempts: 1,
        })?;
        let digest = sha256_hex(&[&self.seed.to_le_bytes(), request.prompt.as_bytes(), request.size.as_bytes()]);
        let mut images = Vec::with_capacity(request.count);
        for i in 0..request.count {
            let name = format!("{}_{i}.svg", &digest[..16]);
            let hue = (u32::from_str_radix(&digest[i % 8..i % 8 + 4], 16).unwrap_or(0)) % 360;
            fs::write(self.output_dir.join(&name), Self::placeholder(&request.prompt, hue)).map_err(|e| {
                ProviderError::Transport {
                    message: e.to_string(),
                    attempts: 1,
                }
            })?;
            let mut meta = BTreeMap::new();
            meta.insert("provider".into(), "mock".into());
            meta.insert("size".into(), request.size.clone());
            meta.insert("index".into(), i.to_string());
            images.push(GeneratedImage {
                uri: format!("{}{name}", self.uri_prefix),
                meta,
            });
        }
        Ok(ImageResponse { images })
    }
}

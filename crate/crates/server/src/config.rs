//! Service configuration: a TOML file, then `IDEASPAN_*` environment
//! overrides, then command-line flags.

use std::env;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use ideaspan_core::providers::openai::HttpProviderConfig;
use ideaspan_core::EngineConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid value for {var}: {value:?}")]
    Env { var: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProvidersConfig {
    pub chat: HttpProviderConfig,
    pub embeddings: HttpProviderConfig,
    pub images: HttpProviderConfig,
    /// Directory for cached chat completions and embeddings.
    pub cache_dir: Option<PathBuf>,
    pub embedding_batch_size: usize,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        let with_model = |model: &str| HttpProviderConfig {
            model: model.into(),
            ..HttpProviderConfig::default()
        };
        Self {
            chat: with_model("gpt-4o"),
            embeddings: with_model("text-embedding-3-small"),
            images: with_model("dall-e-3"),
            cache_dir: None,
            embedding_batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub bind: SocketAddr,
    pub session_dir: PathBuf,
    /// Word concreteness norms (tab, comma or semicolon separated).
    pub lexicon_path: Option<PathBuf>,
    /// Use deterministic offline providers.
    pub mock: bool,
    /// Fixes session ids, expansion seeds and timestamps.
    pub seed: Option<u64>,
    pub mock_embedding_dim: usize,
    pub engine: EngineConfig,
    pub providers: ProvidersConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            session_dir: PathBuf::from("sessions"),
            lexicon_path: None,
            mock: false,
            seed: None,
            mock_embedding_dim: 64,
            engine: EngineConfig::default(),
            providers: ProvidersConfig::default(),
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads `path` if given, otherwise starts from defaults, and applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.apply_env(|k| env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Env { var, value })
        }
        if let Some(v) = get("IDEASPAN_BIND") {
            self.bind = parse("IDEASPAN_BIND", v)?;
        }
        if let Some(v) = get("IDEASPAN_SESSION_DIR") {
            self.session_dir = v.into();
        }
        if let Some(v) = get("IDEASPAN_LEXICON") {
            self.lexicon_path = Some(v.into());
        }
        if let Some(v) = get("IDEASPAN_MOCK") {
            self.mock = matches!(v.trim(), "1" | "true" | "yes" | "on");
        }
        if let Some(v) = get("IDEASPAN_SEED") {
            self.seed = Some(parse("IDEASPAN_SEED", v)?);
        }
        if let Some(v) = get("IDEASPAN_CACHE_DIR") {
            self.providers.cache_dir = Some(v.into());
        }
        if let Some(v) = get("IDEASPAN_BASE_URL") {
            for p in self.http_providers_mut() {
                p.base_url = v.clone();
            }
        }
        let key = get("IDEASPAN_API_KEY").or_else(|| get("OPENAI_API_KEY"));
        if let Some(k) = key {
            for p in self.http_providers_mut() {
                if p.api_key.is_none() {
                    p.api_key = Some(k.clone());
                }
            }
        }
        Ok(())
    }

    fn http_providers_mut(&mut self) -> [&mut HttpProviderConfig; 3] {
        let p = &mut self.providers;
        [&mut p.chat, &mut p.embeddings, &mut p.images]
    }
}

//! `ideaspan` command line: headless sessions stored in a single file,
//! script replay, and the HTTP server.

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ideaspan_core::{ExpansionMode, NodeId, Session};

use crate::api::{router, AppState};
use crate::config::Config;
use crate::error::{ApiError, ErrorCode};
use crate::explorer::Explorer;
use crate::store::SessionStore;

#[derive(Debug, Parser)]
#[command(name = "ideaspan", version, about = "Explore variations of a text-to-image prompt")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Session document to read and write.
    #[arg(long, global = true, default_value = "session.json")]
    pub session: PathBuf,
    /// Use offline deterministic providers.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Fix every random choice and timestamp.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, env = "IDEASPAN_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl std::str::FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or("span must look like START:END")?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad span bound {v:?}"));
        Ok(Span {
            start: parse(a)?,
            end: parse(b)?,
        })
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Start a session from a prompt.
    New {
        prompt: String,
        /// Overwrite an existing session file.
        #[arg(long)]
        force: bool,
    },
    /// Suggest four variations of part of a node's prompt.
    Expand {
        node: NodeId,
        /// Character range, end exclusive.
        #[arg(long)]
        span: Span,
        #[arg(long, default_value = "detail")]
        mode: ExpansionMode,
        #[arg(long, default_value_t = 0.5)]
        novelty: f64,
    },
    /// Generate four images for a node.
    Images { node: NodeId },
    /// Drop a suggestion and get a replacement.
    Reject { node: NodeId },
    /// Make a suggestion expandable.
    Branch { node: NodeId },
    /// Print the session document, or an outline with --tree.
    Show {
        #[arg(long)]
        tree: bool,
    },
    /// Diversity of the prompts tried so far.
    Metrics {
        #[arg(long)]
        json: bool,
    },
    /// Run commands from a file, one per line.
    Replay { script: PathBuf },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        #[arg(long)]
        session_dir: Option<PathBuf>,
    },
}

/// One line of a replay script.
#[derive(Debug, Parser)]
#[command(no_binary_name = true)]
struct ScriptLine {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {source}")]
    Script { line: usize, source: Box<CliError> },
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

pub struct Context {
    config: Config,
    session_path: PathBuf,
    explorer: Explorer,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        let mut config = Config::load(global.config.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
        config.mock |= global.mock;
        if global.seed.is_some() {
            config.seed = global.seed;
        }
        let base = match global.session.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let explorer = Explorer::from_config(&config, &base.join("images"), "images/")?;
        Ok(Self {
            config,
            session_path: global.session.clone(),
            explorer,
        })
    }

    fn load(&self) -> Result<Session, CliError> {
        if !self.session_path.exists() {
            return Err(ApiError::not_found(format!(
                "no session at {}; run `ideaspan new <prompt>` first",
                self.session_path.display()
            ))
            .into());
        }
        Ok(Session::load(&self.session_path).map_err(ApiError::from)?)
    }

    fn save(&self, session: &Session) -> Result<(), CliError> {
        Ok(session.save(&self.session_path).map_err(ApiError::from)?)
    }

    /// Runs one command and returns what it prints.
    pub async fn run(&self, command: &Command) -> Result<String, CliError> {
        let mut out = String::new();
        match command {
            Command::New { prompt, force } => {
                if self.session_path.exists() && !force {
                    return Err(ApiError::new(
                        ErrorCode::InvalidState,
                        format!("{} already exists (use --force)", self.session_path.display()),
                    )
                    .into());
                }
                let session = self.explorer.create(self.explorer.session_id(0), prompt)?;
                self.save(&session)?;
                let _ = writeln!(out, "session {}", session.session_id);
                let _ = writeln!(out, "#0 {}", session.root().prompt_text);
            }
            Command::Expand {
                node,
                span,
                mode,
                novelty,
            } => {
                let mut session = self.load()?;
                let ids = self
                    .explorer
                    .expand(&mut session, *node, span.start, span.end, *mode, *novelty)
                    .await?;
                self.save(&session)?;
                for id in ids {
                    let _ = writeln!(out, "#{id} {}", session.node(id).map_err(ApiError::from)?.prompt_text);
                }
            }
            Command::Images { node } => {
                let mut session = self.load()?;
                let images = self.explorer.images(&mut session, *node).await?;
                self.save(&session)?;
                for image in images {
                    let _ = writeln!(out, "{}", image.uri);
                }
            }
            Command::Reject { node } => {
                let mut session = self.load()?;
                let result = self.explorer.reject(&mut session, *node);
                // The node is removed even when no replacement is left.
                self.save(&session)?;
                let id = result?;
                let text = &session.node(id).map_err(ApiError::from)?.prompt_text;
                let _ = writeln!(out, "removed #{node}, added #{id} {text}");
            }
            Command::Branch { node } => {
                let mut session = self.load()?;
                self.explorer.branch(&mut session, *node)?;
                self.save(&session)?;
                let _ = writeln!(out, "#{node} is now a branch");
            }
            Command::Show { tree } => {
                let session = self.load()?;
                out = if *tree { session.render_tree() } else { session.to_document() };
            }
            Command::Metrics { json } => {
                let session = self.load()?;
                let report = self.explorer.metrics(&session).await?;
                out = if *json {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                } else {
                    report.to_table()
                };
            }
            Command::Replay { script } => {
                let text = fs::read_to_string(script).map_err(|e| io_error(script, e))?;
                for (i, line) in text.lines().enumerate() {
                    let line_no = i + 1;
                    let wrap = |source: CliError| CliError::Script {
                        line: line_no,
                        source: Box::new(source),
                    };
                    let trimmed = line.trim();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        continue;
                    }
                    let words = shlex::split(trimmed).ok_or_else(|| wrap(CliError::Usage("unbalanced quotes".into())))?;
                    let parsed = ScriptLine::try_parse_from(words).map_err(|e| wrap(CliError::Usage(e.to_string())))?;
                    if matches!(parsed.command, Command::Replay { .. } | Command::Serve { .. }) {
                        return Err(wrap(CliError::Usage("replay and serve cannot be scripted".into())));
                    }
                    let printed = Box::pin(self.run(&parsed.command)).await.map_err(wrap)?;
                    let _ = writeln!(out, "> {trimmed}");
                    out.push_str(&printed);
                }
            }
            Command::Serve { bind, session_dir } => {
                let mut config = self.config.clone();
                if let Some(b) = bind {
                    config.bind = *b;
                }
                if let Some(d) = session_dir {
                    config.session_dir = d.clone();
                }
                serve(config).await?;
            }
        }
        Ok(out)
    }
}

pub async fn serve(config: Config) -> Result<(), CliError> {
    let store = SessionStore::new(&config.session_dir).map_err(|e| io_error(&config.session_dir, e))?;
    let explorer = Explorer::from_config(&config, &config.session_dir.join("images"), "images/")?;
    let app = router(Arc::new(AppState::new(explorer, store)));
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| CliError::Usage(format!("cannot bind {}: {e}", config.bind)))?;
    tracing::info!(addr = %config.bind, dir = %config.session_dir.display(), "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Usage(e.to_string()))
}

//! The exploration history: an append-only tree of prompts.
//!
//! The root holds the user's initial prompt. Expanding a node attaches the
//! four suggestions from a [`SuggestionSet`] as children; rejecting one
//! flags it removed and attaches a replacement drawn from the same pool;
//! promoting a suggestion to a branch lets it be expanded in turn. Nothing
//! is ever deleted, so the tree also records what the user turned down.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concreteness::{annotate_prompt, ConcretenessAnnotation, Lexicon};
use crate::engine::{select_replacement, splice, EngineError, ExpansionRequest, SuggestionSet};

mod clock;
mod document;

pub use clock::{Clock, LogicalClock, SystemClock};
pub use document::SCHEMA_VERSION;

/// Most suggestions shown under one node at a time.
pub const MAX_ACTIVE_SUGGESTIONS: usize = 4;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Validation(String),
    #[error("node {0} not found")]
    NotFound(NodeId),
    #[error("{0}")]
    InvalidState(String),
    #[error("candidate pool for the parent of node {node} is exhausted")]
    PoolExhausted { node: NodeId },
    #[error("unsupported session schema version {0}")]
    UnsupportedSchema(u64),
    #[error("corrupt session document: {0}")]
    Corrupt(String),
    #[error("session I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim_start_matches('#').parse().map(NodeId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    Suggestion,
    /// A suggestion the user chose to explore further.
    Branch,
}

impl NodeKind {
    fn label(self) -> &'static str {
        match self {
            NodeKind::Root => "root",
            NodeKind::Suggestion => "suggestion",
            NodeKind::Branch => "branch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub uri: String,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, String>,
}

/// Where a suggestion came from: which of its parent's expansions, and
/// which member of that expansion's retained pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionOrigin {
    pub expansion: usize,
    pub candidate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub prompt_text: String,
    pub parent: Option<NodeId>,
    /// Every suggestion set generated from this node; the last one is current.
    #[serde(default)]
    pub expansions: Vec<SuggestionSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<SuggestionOrigin>,
    #[serde(default)]
    pub images: Vec<ImageRef>,
    #[serde(default)]
    pub images_pending: bool,
    #[serde(default)]
    pub removed: bool,
    #[serde(default)]
    pub annotations: Vec<ConcretenessAnnotation>,
    pub created_at: DateTime<Utc>,
}

impl GraphNode {
    /// The request behind the node's current suggestions.
    pub fn request(&self) -> Option<&ExpansionRequest> {
        self.expansions.last().map(|s| &s.request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEvent {
    pub node: NodeId,
    pub prompt: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u64,
    pub session_id: String,
    nodes: Vec<GraphNode>,
    /// Every image generation, in the order it happened.
    #[serde(default)]
    image_log: Vec<ImageEvent>,
}

impl Session {
    pub fn create(
        session_id: impl Into<String>,
        initial_prompt: &str,
        lexicon: &Lexicon,
        clock: &dyn Clock,
    ) -> Result<Self, SessionError> {
        if initial_prompt.trim().is_empty() {
            return Err(SessionError::Validation("initial prompt is empty".into()));
        }
        let root = GraphNode {
            id: NodeId(0),
            kind: NodeKind::Root,
            prompt_text: initial_prompt.to_string(),
            parent: None,
            expansions: Vec::new(),
            origin: None,
            images: Vec::new(),
            images_pending: false,
            removed: false,
            annotations: annotate_prompt(initial_prompt, lexicon),
            created_at: clock.now(0),
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            session_id: session_id.into(),
            nodes: vec![root],
            image_log: Vec::new(),
        })
    }

    pub fn root(&self) -> &GraphNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn image_log(&self) -> &[ImageEvent] {
        &self.image_log
    }

    pub fn node(&self, id: NodeId) -> Result<&GraphNode, SessionError> {
        self.nodes.get(id.index()).ok_or(SessionError::NotFound(id))
    }

    fn node_mut(&mut self, id: NodeId) -> Result<&mut GraphNode, SessionError> {
        self.nodes.get_mut(id.index()).ok_or(SessionError::NotFound(id))
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = &GraphNode> {
        self.nodes.iter().filter(move |n| n.parent == Some(id))
    }

    /// Visible suggestions under `parent`: non-removed children from its
    /// current expansion, promoted ones included.
    pub fn active_suggestions(&self, parent: NodeId) -> Vec<NodeId> {
        let Ok(p) = self.node(parent) else {
            return Vec::new();
        };
        let Some(current) = p.expansions.len().checked_sub(1) else {
            return Vec::new();
        };
        self.children(parent)
            .filter(|c| !c.removed && c.origin.is_some_and(|o| o.expansion == current))
            .map(|c| c.id)
            .collect()
    }

    fn sequence(&self) -> u64 {
        (self.nodes.len() + self.image_log.len()) as u64
    }

    fn push_suggestion(&mut self, parent: NodeId, origin: SuggestionOrigin, prompt_text: String, clock: &dyn Clock) -> NodeId {
        let id = NodeId(self.nodes.len() as u64);
        let created_at = clock.now(self.sequence());
        self.nodes.push(GraphNode {
            id,
            kind: NodeKind::Suggestion,
            prompt_text,
            parent: Some(parent),
            expansions: Vec::new(),
            origin: Some(origin),
            images: Vec::new(),
            images_pending: false,
            removed: false,
            annotations: Vec::new(),
            created_at,
        });
        id
    }

    /// Records `set` as the parent's current expansion and adds one
    /// suggestion child per representative.
    pub fn attach_suggestions(
        &mut self,
        parent: NodeId,
        set: SuggestionSet,
        clock: &dyn Clock,
    ) -> Result<Vec<NodeId>, SessionError> {
        let p = self.node(parent)?;
        if p.removed {
            return Err(SessionError::InvalidState(format!("node {parent} was removed")));
        }
        if p.kind == NodeKind::Suggestion {
            return Err(SessionError::InvalidState(format!(
                "node {parent} is a suggestion; promote it to a branch before expanding"
            )));
        }
        if set.request.origin_prompt != p.prompt_text {
            return Err(SessionError::Validation(format!(
                "suggestion set was generated for {:?}, not for node {parent}",
                set.request.origin_prompt
            )));
        }
        if set.suggestions.is_empty() || set.suggestions.len() > MAX_ACTIVE_SUGGESTIONS {
            return Err(SessionError::Validation(format!(
                "suggestion set has {} suggestions",
                set.suggestions.len()
            )));
        }
        for &i in &set.suggestions {
            let c = set
                .retained_pool
                .get(i)
                .ok_or_else(|| SessionError::Validation(format!("suggestion index {i} outside pool")))?;
            if c.full_prompt != splice(&p.prompt_text, &set.request.span, &c.span_text) {
                return Err(SessionError::Validation(format!(
                    "candidate {:?} is not a splice of node {parent}",
                    c.full_prompt
                )));
            }
        }

        let expansion = p.expansions.len();
        let picks: Vec<(usize, String)> = set
            .suggestions
            .iter()
            .map(|&i| (i, set.retained_pool[i].full_prompt.clone()))
            .collect();
        self.node_mut(parent)?.expansions.push(set);
        Ok(picks
            .into_iter()
            .map(|(candidate, text)| self.push_suggestion(parent, SuggestionOrigin { expansion, candidate }, text, clock))
            .collect())
    }

    /// Flags a suggestion as rejected and attaches the pool member farthest
    /// from it and from the remaining suggestions.
    ///
    /// When the pool has nothing left the node stays removed and
    /// [`SessionError::PoolExhausted`] is returned.
    pub fn remove_suggestion(&mut self, id: NodeId, clock: &dyn Clock) -> Result<NodeId, SessionError> {
        let node = self.node(id)?;
        if node.kind != NodeKind::Suggestion {
            return Err(SessionError::InvalidState(format!(
                "node {id} is a {} and cannot be removed",
                node.kind.label()
            )));
        }
        if node.removed {
            return Err(SessionError::InvalidState(format!("node {id} is already removed")));
        }
        if self.children(id).next().is_some() {
            return Err(SessionError::InvalidState(format!("node {id} has children")));
        }
        let (parent, origin) = match (node.parent, node.origin) {
            (Some(p), Some(o)) => (p, o),
            _ => return Err(SessionError::Corrupt(format!("suggestion {id} has no origin"))),
        };
        self.node_mut(id)?.removed = true;

        let mut current = Vec::new();
        let mut excluded = Vec::new();
        for sibling in self.children(parent) {
            match sibling.origin {
                Some(o) if o.expansion == origin.expansion && sibling.id != id => {
                    if sibling.removed {
                        excluded.push(o.candidate);
                    } else {
                        current.push(o.candidate);
                    }
                }
                _ => {}
            }
        }
        let set = &self.node(parent)?.expansions[origin.expansion];
        match select_replacement(&set.retained_pool, origin.candidate, &current, &excluded) {
            Ok(candidate) => {
                let text = set.retained_pool[candidate].full_prompt.clone();
                Ok(self.push_suggestion(
                    parent,
                    SuggestionOrigin {
                        expansion: origin.expansion,
                        candidate,
                    },
                    text,
                    clock,
                ))
            }
            Err(EngineError::PoolExhausted) => Err(SessionError::PoolExhausted { node: id }),
            Err(e) => Err(SessionError::InvalidState(e.to_string())),
        }
    }

    /// Turns a suggestion into an expandable branch. Roots and branches are
    /// returned unchanged.
    pub fn promote_to_branch(&mut self, id: NodeId, lexicon: &Lexicon) -> Result<NodeId, SessionError> {
        let node = self.node_mut(id)?;
        if node.removed {
            return Err(SessionError::InvalidState(format!("node {id} was removed")));
        }
        if node.kind == NodeKind::Suggestion {
            node.kind = NodeKind::Branch;
            node.annotations = annotate_prompt(&node.prompt_text, lexicon);
        }
        Ok(id)
    }

    fn check_image_target(&self, id: NodeId) -> Result<(), SessionError> {
        if self.node(id)?.removed {
            return Err(SessionError::InvalidState(format!("node {id} was removed")));
        }
        Ok(())
    }

    pub fn mark_images_pending(&mut self, id: NodeId) -> Result<(), SessionError> {
        self.check_image_target(id)?;
        self.node_mut(id)?.images_pending = true;
        Ok(())
    }

    pub fn clear_images_pending(&mut self, id: NodeId) -> Result<(), SessionError> {
        self.node_mut(id)?.images_pending = false;
        Ok(())
    }

    /// Attaches one generation's worth of images to a node.
    pub fn attach_images(&mut self, id: NodeId, images: Vec<ImageRef>, clock: &dyn Clock) -> Result<(), SessionError> {
        self.check_image_target(id)?;
        if images.len() != crate::providers::IMAGES_PER_REQUEST {
            return Err(SessionError::Validation(format!(
                "expected {} images, got {}",
                crate::providers::IMAGES_PER_REQUEST,
                images.len()
            )));
        }
        if images.iter().any(|i| i.uri.is_empty()) {
            return Err(SessionError::Validation("image locator is empty".into()));
        }
        let at = clock.now(self.sequence());
        let node = self.node_mut(id)?;
        node.images.extend(images);
        node.images_pending = false;
        let prompt = node.prompt_text.clone();
        self.image_log.push(ImageEvent { node: id, prompt, at });
        Ok(())
    }

    /// Prompts the user generated images for, in generation order.
    pub fn list_tried_prompts(&self) -> Vec<&str> {
        self.image_log.iter().map(|e| e.prompt.as_str()).collect()
    }

    /// Indented outline of the tree, children in creation order.
    pub fn render_tree(&self) -> String {
        let mut out = String::new();
        self.render_node(&mut out, NodeId(0), 0);
        out
    }

    fn render_node(&self, out: &mut String, id: NodeId, depth: usize) {
        let Ok(node) = self.node(id) else { return };
        let mut tags = vec![node.kind.label()];
        if node.removed {
            tags.push("removed");
        }
        if node.images_pending {
            tags.push("images pending");
        }
        let images = if node.images.is_empty() {
            String::new()
        } else {
            format!(" ({} images)", node.images.len())
        };
        let _ = writeln!(
            out,
            "{}#{} [{}] {}{}",
            "  ".repeat(depth),
            node.id,
            tags.join(", "),
            node.prompt_text,
            images
        );
        let children: Vec<NodeId> = self.children(id).map(|c| c.id).collect();
        for child in children {
            self.render_node(out, child, depth + 1);
        }
    }
}

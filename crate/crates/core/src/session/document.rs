//! Session documents: versioned JSON, validated on load, written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{NodeId, NodeKind, Session, SessionError};
use crate::engine::splice;

pub const SCHEMA_VERSION: u64 = 1;

impl Session {
    pub fn to_document(&self) -> String {
        let mut doc = serde_json::to_string_pretty(self).expect("session serializes");
        doc.push('\n');
        doc
    }

    pub fn from_document(doc: &str) -> Result<Self, SessionError> {
        let value: serde_json::Value =
            serde_json::from_str(doc).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(SCHEMA_VERSION) => {}
            Some(other) => return Err(SessionError::UnsupportedSchema(other)),
            None => return Err(SessionError::Corrupt("missing schema_version".into())),
        }
        let session: Session = serde_json::from_value(value).map_err(|e| SessionError::Corrupt(e.to_string()))?;
        session.validate()?;
        Ok(session)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        Self::from_document(&fs::read_to_string(path)?)
    }

    /// Writes to a temp file in the same directory and renames it over
    /// `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SessionError> {
        let path = path.as_ref();
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_document().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| SessionError::Io(e.error))?;
        Ok(())
    }

    /// Structural checks: sequential ids, a single root, parents that exist
    /// and precede their children, and suggestion origins that resolve.
    pub fn validate(&self) -> Result<(), SessionError> {
        let corrupt = |msg: String| Err(SessionError::Corrupt(msg));
        if self.nodes.is_empty() {
            return corrupt("session has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != NodeId(i as u64) {
                return corrupt(format!("node at position {i} has id {}", node.id));
            }
            match (node.kind, node.parent) {
                (NodeKind::Root, None) if i == 0 => continue,
                (NodeKind::Root, _) => return corrupt(format!("unexpected root node {}", node.id)),
                (_, None) => return corrupt(format!("node {} has no parent", node.id)),
                (_, Some(p)) if p.0 as usize >= self.nodes.len() => {
                    return corrupt(format!("node {} points to missing parent {p}", node.id))
                }
                (_, Some(p)) if p >= node.id => {
                    return corrupt(format!("node {} has parent {p} created after it", node.id))
                }
                (_, Some(p)) => {
                    let parent = &self.nodes[p.0 as usize];
                    let origin = node
                        .origin
                        .ok_or_else(|| SessionError::Corrupt(format!("node {} has no origin", node.id)))?;
                    let candidate = parent
                        .expansions
                        .get(origin.expansion)
                        .and_then(|set| set.retained_pool.get(origin.candidate).map(|c| (set, c)));
                    let Some((set, c)) = candidate else {
                        return corrupt(format!("node {} refers to a missing candidate", node.id));
                    };
                    if node.prompt_text != splice(&parent.prompt_text, &set.request.span, &c.span_text) {
                        return corrupt(format!("node {} text does not match its candidate", node.id));
                    }
                }
            }
        }
        for event in &self.image_log {
            if event.node.0 as usize >= self.nodes.len() {
                return corrupt(format!("image event refers to missing node {}", event.node));
            }
        }
        Ok(())
    }
}

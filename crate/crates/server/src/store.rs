//! One JSON document per session in a directory, with a per-session lock
//! so that writers to the same session are serialized.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dashmap::DashMap;
use ideaspan_core::{Session, SessionError};
use tokio::sync::{Mutex, OwnedMutexGuard};

use crate::error::ApiError;

pub struct SessionStore {
    dir: PathBuf,
    locks: DashMap<String, Arc<Mutex<()>>>,
}

impl SessionStore {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            locks: DashMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Ids become file names, so only a conservative alphabet is accepted.
    pub fn path(&self, id: &str) -> Result<PathBuf, ApiError> {
        let ok = !id.is_empty()
            && id.len() <= 64
            && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(ApiError::not_found(format!("session {id:?} not found")));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    pub async fn lock(&self, id: &str) -> OwnedMutexGuard<()> {
        let lock = self.locks.entry(id.to_string()).or_default().clone();
        lock.lock_owned().await
    }

    pub async fn load(&self, id: &str) -> Result<Session, ApiError> {
        let path = self.path(id)?;
        match tokio::fs::read_to_string(&path).await {
            Ok(doc) => Ok(Session::from_document(&doc)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(ApiError::not_found(format!("session {id} not found")))
            }
            Err(e) => Err(SessionError::Io(e).into()),
        }
    }

    pub async fn save(&self, session: &Session) -> Result<(), ApiError> {
        let path = self.path(&session.session_id)?;
        let session = session.clone();
        tokio::task::spawn_blocking(move || session.save(path))
            .await
            .map_err(|e| ApiError::new(crate::error::ErrorCode::InvalidState, e.to_string()))??;
        Ok(())
    }
}

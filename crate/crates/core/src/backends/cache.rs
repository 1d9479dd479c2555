//! Append-only JSONL response cache. Entries are keyed by a hash of the
//! instance id, prompt text, model, temperature and backend kind.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendIdentity, ModelResponse};
use crate::promptkit::RenderedPrompt;
use crate::seeds::fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    ReadWrite,
    /// Replay only; a miss is an error.
    ReadOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub instance_id: String,
    pub model: String,
    pub response: ModelResponse,
}

pub struct CachedBackend {
    inner: Option<Box<dyn Backend>>,
    identity: BackendIdentity,
    path: PathBuf,
    entries: RwLock<HashMap<String, ModelResponse>>,
    writer: Mutex<Option<File>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

pub fn cache_key(identity: &BackendIdentity, prompt: &RenderedPrompt) -> String {
    let labels: Vec<&str> = prompt.label_map.labels().collect();
    fingerprint(&[
        &prompt.instance_id,
        &prompt.text,
        &identity.model,
        &format!("{:?}", identity.temperature),
        identity.kind.as_str(),
        &labels.join(","),
    ])
}

fn load_entries(path: &Path) -> Result<HashMap<String, ModelResponse>, BackendError> {
    let mut map = HashMap::new();
    if !path.exists() {
        return Ok(map);
    }
    let file = File::open(path).map_err(|e| BackendError::Cache(format!("{}: {e}", path.display())))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BackendError::Cache(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CacheEntry>(&line) {
            Ok(entry) => {
                map.insert(entry.key, entry.response);
            }
            // A run killed mid-write can leave a torn last line.
            Err(e) => log::warn!("{}:{}: skipping unreadable cache line: {e}", path.display(), i + 1),
        }
    }
    Ok(map)
}

impl CachedBackend {
    pub fn open(path: impl Into<PathBuf>, inner: Box<dyn Backend>) -> Result<Self, BackendError> {
        let path = path.into();
        let entries = load_entries(&path)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| BackendError::Cache(format!("{}: {e}", dir.display())))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| BackendError::Cache(format!("{}: {e}", path.display())))?;
        let existing = std::fs::read(&path).map_err(|e| BackendError::Cache(format!("{}: {e}", path.display())))?;
        if existing.last().is_some_and(|b| *b != b'\n') {
            writeln!(file).map_err(|e| BackendError::Cache(format!("{}: {e}", path.display())))?;
        }
        Ok(CachedBackend {
            identity: inner.identity(),
            inner: Some(inner),
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    /// Replays a cache without any live backend behind it.
    pub fn replay(path: impl Into<PathBuf>, identity: BackendIdentity) -> Result<Self, BackendError> {
        let path = path.into();
        if !path.is_file() {
            return Err(BackendError::Cache(format!("{}: no such cache file", path.display())));
        }
        Ok(CachedBackend {
            inner: None,
            identity,
            entries: RwLock::new(load_entries(&path)?),
            path,
            writer: Mutex::new(None),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn mode(&self) -> CacheMode {
        if self.inner.is_some() {
            CacheMode::ReadWrite
        } else {
            CacheMode::ReadOnly
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (hits, misses) so far.
    pub fn stats(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    fn store(&self, key: String, prompt: &RenderedPrompt, response: &ModelResponse) -> Result<(), BackendError> {
        let entry = CacheEntry {
            key: key.clone(),
            instance_id: prompt.instance_id.clone(),
            model: self.identity.model.clone(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&entry).map_err(|e| BackendError::Cache(e.to_string()))?;
        {
            let mut guard = self.writer.lock().expect("cache writer lock");
            if let Some(file) = guard.as_mut() {
                writeln!(file, "{line}").map_err(|e| BackendError::Cache(format!("{}: {e}", self.path.display())))?;
            }
        }
        self.entries.write().expect("cache lock").insert(key, response.clone());
        Ok(())
    }
}

impl Backend for CachedBackend {
    fn complete(&self, prompt: &RenderedPrompt, attempt: u32) -> Result<ModelResponse, BackendError> {
        let key = cache_key(&self.identity, prompt);
        let bypass = attempt > 0 && self.inner.is_some();
        if !bypass {
            if let Some(hit) = self.entries.read().expect("cache lock").get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(hit.clone());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let Some(inner) = &self.inner else {
            return Err(BackendError::CacheMiss { key });
        };
        let response = inner.complete(prompt, attempt)?;
        self.store(key, prompt, &response)?;
        Ok(response)
    }

    fn identity(&self) -> BackendIdentity {
        self.identity.clone()
    }
}

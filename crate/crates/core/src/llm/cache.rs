//! Append-only JSONL cache of LLM exchanges, keyed by model and prompt.

use super::client::{ChatClient, ChatRequest};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    #[serde(default)]
    pub node_id: Option<usize>,
    pub prompt: String,
    pub response: String,
    /// Short label of how the response was interpreted.
    #[serde(default)]
    pub parsed: String,
    pub model: String,
    pub timestamp: String,
}

pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update(b"\n");
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

struct Inner {
    entries: HashMap<String, CacheEntry>,
    order: Vec<String>,
    sink: Option<File>,
}

pub struct ResponseCache {
    path: Option<PathBuf>,
    read_only: bool,
    inner: Mutex<Inner>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            read_only: false,
            inner: Mutex::new(Inner { entries: HashMap::new(), order: Vec::new(), sink: None }),
        }
    }

    /// Opens (creating if needed) a cache file; new entries are appended.
    pub fn open(path: &Path) -> Result<Self> {
        let mut cache = Self::load(path, false)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let sink = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        cache.inner.get_mut().unwrap().sink = Some(sink);
        Ok(cache)
    }

    /// Opens an existing cache for replay; lookups only.
    pub fn read_only(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        Self::load(path, true)
    }

    fn load(path: &Path, read_only: bool) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut order = Vec::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                if !entries.contains_key(&entry.key) {
                    order.push(entry.key.clone());
                }
                entries.insert(entry.key.clone(), entry);
            }
        }
        Ok(ResponseCache {
            path: Some(path.to_path_buf()),
            read_only,
            inner: Mutex::new(Inner { entries, order, sink: None }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn is_read_only(&self) -> bool {
        self.read_only
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        self.inner.lock().unwrap().entries.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in first-insertion order.
    pub fn entries(&self) -> Vec<CacheEntry> {
        let inner = self.inner.lock().unwrap();
        inner.order.iter().map(|k| inner.entries[k].clone()).collect()
    }

    /// The model shared by every entry, if there is exactly one.
    pub fn sole_model(&self) -> Option<String> {
        let inner = self.inner.lock().unwrap();
        let mut models = inner.entries.values().map(|e| e.model.as_str());
        let first = models.next()?;
        models.all(|m| m == first).then(|| first.to_owned())
    }

    pub fn insert(&self, entry: CacheEntry) -> Result<()> {
        if self.read_only {
            return Err(Error::InvalidArgument("cache is read-only".into()));
        }
        let mut inner = self.inner.lock().unwrap();
        if let Some(sink) = inner.sink.as_mut() {
            let line = serde_json::to_string(&entry)? + "\n";
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            sink.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
            sink.flush().map_err(|e| Error::io(path, e))?;
        }
        if !inner.entries.contains_key(&entry.key) {
            inner.order.push(entry.key.clone());
        }
        inner.entries.insert(entry.key.clone(), entry);
        Ok(())
    }
}

/// Client that refuses every request: used when replaying a cache.
pub struct ReplayOnly;

impl ChatClient for ReplayOnly {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        Err(Error::CacheMiss(cache_key(&request.model, &request.prompt_text())))
    }
}

/// A chat client plus the cache that fronts it.
pub struct LlmSession {
    client: Box<dyn ChatClient>,
    cache: ResponseCache,
    model: String,
}

impl LlmSession {
    pub fn new(client: Box<dyn ChatClient>, cache: ResponseCache, model: &str) -> Self {
        LlmSession { client, cache, model: model.to_owned() }
    }

    /// Replays `cache` without ever calling out; a missing prompt is a
    /// [`Error::CacheMiss`].
    pub fn replay(cache: ResponseCache, model: &str) -> Self {
        Self::new(Box::new(ReplayOnly), cache, model)
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// Returns the cached answer to `prompt` or asks the client and
    /// records the answer. `label` maps a response to its parsed label.
    pub fn ask(
        &self,
        prompt: &str,
        node_id: Option<usize>,
        temperature: f64,
        max_tokens: u32,
        label: &dyn Fn(&str) -> String,
    ) -> Result<String> {
        let request = ChatRequest::user(&self.model, prompt, temperature, max_tokens);
        let key = cache_key(&self.model, &request.prompt_text());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.response);
        }
        if self.cache.is_read_only() {
            return Err(Error::CacheMiss(key));
        }
        let response = self.client.complete(&request)?;
        self.cache.insert(CacheEntry {
            key,
            node_id,
            prompt: prompt.to_owned(),
            parsed: label(&response),
            response: response.clone(),
            model: self.model.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        })?;
        Ok(response)
    }
}

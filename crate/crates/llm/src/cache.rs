use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::provider::{cache_key, Completion, LlmProvider, LlmRequest, ProviderError, Role};

/// One cached exchange, stored as `<key>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub role: Role,
    pub trial: u32,
    pub prompt: String,
    pub response: String,
    pub recorded_at: u64,
}

#[derive(Debug)]
pub struct CacheDir {
    dir: PathBuf,
    write: Mutex<()>,
}

impl CacheDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CacheDir {
            dir: dir.into(),
            write: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn file(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, ProviderError> {
        let path = self.file(key);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ProviderError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|e| ProviderError::Cache(format!("{}: {e}", path.display())))?;
        if entry.key != key {
            return Err(ProviderError::Cache(format!("{}: key mismatch", path.display())));
        }
        Ok(Some(entry))
    }

    /// Writes through a temp file and rename so readers never see a partial entry.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), ProviderError> {
        let _guard = self.write.lock().expect("cache write lock");
        let err = |e: std::io::Error| ProviderError::Cache(format!("{}: {e}", self.dir.display()));
        std::fs::create_dir_all(&self.dir).map_err(err)?;
        let tmp = self.dir.join(format!(".{}.tmp", entry.key));
        let text = serde_json::to_string_pretty(entry).expect("entry serializes");
        std::fs::write(&tmp, text + "\n").map_err(err)?;
        std::fs::rename(&tmp, self.file(&entry.key)).map_err(err)
    }

    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|rd| {
                rd.filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn hit(entry: CacheEntry) -> Completion {
    Completion {
        text: entry.response,
        cache_key: Some(entry.key),
        recorded_at: Some(entry.recorded_at),
    }
}

/// Serves responses from a cache directory only; a miss is an error.
#[derive(Debug)]
pub struct ReplayCache {
    cache: CacheDir,
    model: String,
}

impl ReplayCache {
    pub fn new(dir: impl Into<PathBuf>, model: impl Into<String>) -> Self {
        ReplayCache {
            cache: CacheDir::new(dir),
            model: model.into(),
        }
    }

    /// Stores a response for (prompt, trial) under this cache's model name.
    pub fn seed(&self, role: Role, prompt: &str, trial: u32, response: &str, recorded_at: u64) -> Result<String, ProviderError> {
        let key = cache_key(&self.model, prompt, trial);
        self.cache.put(&CacheEntry {
            key: key.clone(),
            model: self.model.clone(),
            role,
            trial,
            prompt: prompt.to_string(),
            response: response.to_string(),
            recorded_at,
        })?;
        Ok(key)
    }
}

impl LlmProvider for ReplayCache {
    fn name(&self) -> String {
        "replay".into()
    }
    fn model(&self) -> &str {
        &self.model
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let key = cache_key(&self.model, &req.prompt, req.trial);
        match self.cache.get(&key)? {
            Some(e) => Ok(hit(e)),
            None => Err(ProviderError::CacheMiss(key)),
        }
    }
}

/// Read-through cache in front of another provider. Misses are forwarded and
/// recorded, so a later `ReplayCache` on the same directory reproduces the run.
pub struct CachedProvider<P> {
    inner: P,
    cache: CacheDir,
}

impl<P: LlmProvider> CachedProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        CachedProvider {
            inner,
            cache: CacheDir::new(dir),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: LlmProvider> LlmProvider for CachedProvider<P> {
    fn name(&self) -> String {
        self.inner.name()
    }
    fn model(&self) -> &str {
        self.inner.model()
    }
    fn complete(&self, req: &LlmRequest) -> Result<Completion, ProviderError> {
        let key = cache_key(self.inner.model(), &req.prompt, req.trial);
        if let Some(e) = self.cache.get(&key)? {
            return Ok(hit(e));
        }
        let c = self.inner.complete(req)?;
        let recorded_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let entry = CacheEntry {
            key: key.clone(),
            model: self.inner.model().to_string(),
            role: req.role,
            trial: req.trial,
            prompt: req.prompt.clone(),
            response: c.text,
            recorded_at,
        };
        self.cache.put(&entry)?;
        Ok(hit(entry))
    }
    fn is_local(&self) -> bool {
        self.inner.is_local()
    }
}

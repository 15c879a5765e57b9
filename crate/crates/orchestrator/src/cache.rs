use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use genomagent_core::SourceId;
use serde::{Deserialize, Serialize};

use crate::error::OrchError;
use crate::program::ExtractionProgram;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub source: SourceId,
    pub endpoint_template: String,
    pub fingerprint: String,
}

#[derive(Debug)]
struct Entry {
    program: ExtractionProgram,
    hits: AtomicU64,
}

type Slot = Arc<tokio::sync::Mutex<Option<Arc<Entry>>>>;

/// Shared store of extraction programs keyed by source, endpoint and page
/// structure. Concurrent lookups of one key are serialized so a program is
/// written at most once.
#[derive(Debug, Default)]
pub struct ExtractionCache {
    slots: Mutex<HashMap<CacheKey, Slot>>,
}

#[derive(Serialize, Deserialize)]
struct PersistedEntry {
    key: CacheKey,
    program: String,
    target_description: String,
    hit_count: u64,
}

impl ExtractionCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, key: &CacheKey) -> Slot {
        self.slots.lock().expect("cache lock").entry(key.clone()).or_default().clone()
    }

    pub async fn get(&self, key: &CacheKey) -> Option<(ExtractionProgram, u64)> {
        let slot = self.slots.lock().expect("cache lock").get(key).cloned()?;
        let guard = slot.lock().await;
        guard.as_ref().map(|e| (e.program.clone(), e.hits.load(Ordering::SeqCst)))
    }

    pub async fn hit_count(&self, key: &CacheKey) -> u64 {
        self.get(key).await.map(|(_, h)| h).unwrap_or(0)
    }

    pub async fn len(&self) -> usize {
        let slots: Vec<Slot> = self.slots.lock().expect("cache lock").values().cloned().collect();
        let mut n = 0;
        for s in slots {
            if s.lock().await.is_some() {
                n += 1;
            }
        }
        n
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }

    /// Returns the cached program for `key` (bumping its hit count) or runs
    /// `create`, which yields a program together with the value it produced.
    /// The program is stored only when `create` succeeds. Returns the
    /// program, the value when freshly created, and whether it was a hit.
    pub async fn get_or_create<T, F, Fut>(&self, key: &CacheKey, create: F) -> Result<CacheOutcome<T>, OrchError>
    where
        F: FnOnce() -> Fut,
        Fut: Future<Output = Result<(ExtractionProgram, T), OrchError>>,
    {
        let slot = self.slot(key);
        let mut guard = slot.lock().await;
        if let Some(entry) = guard.as_ref() {
            entry.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(CacheOutcome::Hit(entry.program.clone()));
        }
        let (program, value) = create().await?;
        *guard = Some(Arc::new(Entry { program: program.clone(), hits: AtomicU64::new(0) }));
        Ok(CacheOutcome::Created(program, value))
    }

    /// Removes a program, e.g. after it stopped matching its pages.
    pub async fn evict(&self, key: &CacheKey) {
        let slot = self.slots.lock().expect("cache lock").get(key).cloned();
        if let Some(slot) = slot {
            *slot.lock().await = None;
        }
    }

    pub async fn save(&self, path: &Path) -> std::io::Result<()> {
        let slots: Vec<(CacheKey, Slot)> =
            self.slots.lock().expect("cache lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut entries = BTreeMap::new();
        for (key, slot) in slots {
            if let Some(e) = slot.lock().await.as_ref() {
                entries.insert(
                    key.clone(),
                    PersistedEntry {
                        key,
                        program: e.program.to_string(),
                        target_description: e.program.target_description.clone(),
                        hit_count: e.hits.load(Ordering::SeqCst),
                    },
                );
            }
        }
        let list: Vec<_> = entries.into_values().collect();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&list)?)?;
        std::fs::rename(tmp, path)
    }

    pub fn load(path: &Path) -> Result<Self, OrchError> {
        let cache = Self::new();
        let raw = std::fs::read(path).map_err(|e| OrchError::Config(format!("{}: {e}", path.display())))?;
        let list: Vec<PersistedEntry> =
            serde_json::from_slice(&raw).map_err(|e| OrchError::Config(format!("{}: {e}", path.display())))?;
        let mut slots = cache.slots.lock().expect("cache lock");
        for p in list {
            let program = ExtractionProgram::parse(&p.program, &p.target_description)?;
            let entry = Entry { program, hits: AtomicU64::new(p.hit_count) };
            slots.insert(p.key, Arc::new(tokio::sync::Mutex::new(Some(Arc::new(entry)))));
        }
        drop(slots);
        Ok(cache)
    }
}

#[derive(Debug)]
pub enum CacheOutcome<T> {
    Hit(ExtractionProgram),
    Created(ExtractionProgram, T),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn key(fp: &str) -> CacheKey {
        CacheKey { source: SourceId::Ucsc, endpoint_template: "blat".into(), fingerprint: fp.into() }
    }

    fn program() -> ExtractionProgram {
        ExtractionProgram::parse(r#"SelectCss("p"), Text"#, "t").unwrap()
    }

    #[tokio::test]
    async fn creates_once_under_concurrency() {
        let cache = Arc::new(ExtractionCache::new());
        let writes = Arc::new(AtomicUsize::new(0));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let (cache, writes) = (cache.clone(), writes.clone());
            handles.push(tokio::spawn(async move {
                cache
                    .get_or_create(&key("a"), || async {
                        writes.fetch_add(1, Ordering::SeqCst);
                        tokio::time::sleep(std::time::Duration::from_millis(5)).await;
                        Ok((program(), ()))
                    })
                    .await
                    .map(|o| matches!(o, CacheOutcome::Hit(_)))
            }));
        }
        let mut hits = 0;
        for h in handles {
            hits += h.await.unwrap().unwrap() as u64;
        }
        assert_eq!(writes.load(Ordering::SeqCst), 1);
        assert_eq!(hits, 7);
        assert_eq!(cache.hit_count(&key("a")).await, 7);
    }

    #[tokio::test]
    async fn failed_creation_is_not_stored() {
        let cache = ExtractionCache::new();
        let r = cache.get_or_create::<(), _, _>(&key("b"), || async { Err(OrchError::ProgramInvalid("x".into())) }).await;
        assert!(r.is_err());
        assert!(cache.get(&key("b")).await.is_none());
        assert!(cache.is_empty().await);
    }

    #[tokio::test]
    async fn persistence_round_trip() {
        let cache = ExtractionCache::new();
        cache.get_or_create(&key("c"), || async { Ok((program(), ())) }).await.unwrap();
        cache.get_or_create(&key("c"), || async { Ok((program(), ())) }).await.unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache/extractors.json");
        cache.save(&path).await.unwrap();
        let loaded = ExtractionCache::load(&path).unwrap();
        assert_eq!(loaded.get(&key("c")).await, Some((program(), 1)));
        loaded.evict(&key("c")).await;
        assert!(loaded.get(&key("c")).await.is_none());
    }
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use async_trait::async_trait;
use genomagent_core::{sha256_hex, TokenUsage};
use serde::{Deserialize, Serialize};

use crate::error::LlmError;
use crate::gateway::LlmBackend;
use crate::request::{CompletionRequest, CompletionResult, FinishReason};

/// One recorded completion, stored as `{digest}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteRecord {
    pub digest: String,
    pub request: CompletionRequest,
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: TokenUsage,
}

impl CassetteRecord {
    pub fn result(&self) -> CompletionResult {
        CompletionResult {
            text: self.text.clone(),
            finish_reason: self.finish_reason.clone(),
            usage: self.usage,
        }
    }
}

/// Directory of completion records keyed by request digest. Reads share a
/// lock; appends take it exclusively and write through a temp file + rename.
#[derive(Debug)]
pub struct CassetteStore {
    dir: PathBuf,
    records: RwLock<HashMap<String, CassetteRecord>>,
}

impl CassetteStore {
    /// Opens an existing cassette directory, loading every record in it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(LlmError::Cassette(format!("cassette directory {} does not exist", dir.display())));
        }
        let mut records = HashMap::new();
        let entries = fs::read_dir(&dir).map_err(|e| LlmError::Cassette(e.to_string()))?;
        for entry in entries {
            let path = entry.map_err(|e| LlmError::Cassette(e.to_string()))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let text = fs::read_to_string(&path).map_err(|e| LlmError::Cassette(e.to_string()))?;
                let record: CassetteRecord = serde_json::from_str(&text)
                    .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
                records.insert(record.digest.clone(), record);
            }
        }
        Ok(Self { dir, records: RwLock::new(records) })
    }

    pub fn create(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        fs::create_dir_all(dir.as_ref()).map_err(|e| LlmError::Cassette(e.to_string()))?;
        Self::open(dir)
    }

    pub fn digest(request: &CompletionRequest) -> String {
        let canonical = serde_json::to_vec(request).expect("request serializes");
        sha256_hex(&canonical)
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("cassette lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, request: &CompletionRequest) -> Option<CassetteRecord> {
        let digest = Self::digest(request);
        self.records.read().expect("cassette lock").get(&digest).cloned()
    }

    pub fn record(&self, request: &CompletionRequest, result: &CompletionResult) -> Result<(), LlmError> {
        let digest = Self::digest(request);
        let record = CassetteRecord {
            digest: digest.clone(),
            request: request.clone(),
            text: result.text.clone(),
            finish_reason: result.finish_reason.clone(),
            usage: result.usage,
        };
        let mut guard = self.records.write().expect("cassette lock");
        let json = serde_json::to_string_pretty(&record).expect("record serializes");
        let target = self.dir.join(format!("{digest}.json"));
        let tmp = self.dir.join(format!(".{digest}.json.tmp"));
        fs::write(&tmp, json).and_then(|_| fs::rename(&tmp, &target)).map_err(|e| LlmError::Cassette(e.to_string()))?;
        guard.insert(digest, record);
        Ok(())
    }
}

/// Serves completions strictly from a cassette.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: Arc<CassetteStore>,
}

impl ReplayBackend {
    pub fn new(store: Arc<CassetteStore>) -> Self {
        Self { store }
    }
}

#[async_trait]
impl LlmBackend for ReplayBackend {
    fn describe(&self) -> String {
        "replay".to_string()
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        self.store
            .lookup(request)
            .map(|r| r.result())
            .ok_or_else(|| LlmError::CassetteMiss { digest: CassetteStore::digest(request) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::LlmGateway;
    use crate::mock::{MockBackend, MockScript};

    #[tokio::test]
    async fn empty_cassette_misses() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(CassetteStore::open(dir.path()).unwrap());
        let replay = ReplayBackend::new(store);
        let err = replay.complete(&CompletionRequest::new("s", "u")).await.unwrap_err();
        assert!(matches!(err, LlmError::CassetteMiss { .. }));
    }

    #[test]
    fn missing_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(CassetteStore::open(dir.path().join("nope")).is_err());
    }

    #[tokio::test]
    async fn recorded_calls_replay_identically() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(CassetteStore::create(dir.path()).unwrap());
        let mock = MockBackend::new(MockScript::new().when("u", "answer→tail"));
        let recording = LlmGateway::new(Arc::new(mock)).with_recording(store.clone());
        let req = CompletionRequest::new("s", "u").stop(&["→"]);
        let live = recording.complete(&req).await.unwrap();

        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);

        let reopened = Arc::new(CassetteStore::open(dir.path()).unwrap());
        let replay = LlmGateway::new(Arc::new(ReplayBackend::new(reopened)));
        assert_eq!(replay.complete(&req).await.unwrap(), live);

        // Re-recording the same digest overwrites in place.
        recording.complete(&req).await.unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

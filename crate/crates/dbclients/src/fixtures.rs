//! Record/replay of source traffic.
//!
//! Each response lives at `{root}/{SOURCE_ID}/{digest}.json`, where the
//! digest covers the method, the canonical URL (query parameters sorted,
//! volatile ones dropped) and a hash of the request body.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use async_trait::async_trait;
use base64::Engine as _;
use genomagent_core::{sha256_hex, ApiRequest, ApiResponse, ContentKind, Method, SourceId};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::transport::{HttpTransport, TransportError};

/// Query parameters that vary between runs without changing the answer.
const VOLATILE_PARAMS: &[&str] = &["api_key", "email", "tool", "timestamp", "ts", "_"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureMode {
    Record,
    Replay,
    Passthrough,
}

impl std::str::FromStr for FixtureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "record" => Ok(FixtureMode::Record),
            "replay" => Ok(FixtureMode::Replay),
            "passthrough" => Ok(FixtureMode::Passthrough),
            other => Err(format!("unknown fixture mode {other:?}")),
        }
    }
}

/// URL with volatile parameters removed and the rest sorted.
pub fn canonical_url(url: &Url) -> String {
    let mut pairs: Vec<(String, String)> = url
        .query_pairs()
        .filter(|(k, _)| !VOLATILE_PARAMS.contains(&k.as_ref()))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    pairs.sort();
    let mut canon = url.clone();
    canon.set_fragment(None);
    if pairs.is_empty() {
        canon.set_query(None);
    } else {
        canon.query_pairs_mut().clear().extend_pairs(pairs);
    }
    canon.to_string()
}

fn canonical_body(body: &[u8]) -> Vec<u8> {
    // Form bodies get the same treatment as query strings.
    let text = match std::str::from_utf8(body) {
        Ok(t) if t.contains('=') && !t.trim_start().starts_with(['{', '[', '<']) => t,
        _ => return body.to_vec(),
    };
    let mut pairs: Vec<(String, String)> = url::form_urlencoded::parse(text.as_bytes())
        .filter(|(k, _)| !VOLATILE_PARAMS.contains(&k.as_ref()))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    pairs.sort();
    url::form_urlencoded::Serializer::new(String::new()).extend_pairs(pairs).finish().into_bytes()
}

pub fn request_digest(request: &ApiRequest) -> String {
    let body_hash = request.body.as_deref().map(|b| sha256_hex(&canonical_body(b))).unwrap_or_default();
    let material = format!("{}\n{}\n{}", request.method.as_str(), canonical_url(request.url()), body_hash);
    sha256_hex(material.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredResponse {
    pub status: u16,
    pub content_kind: ContentKind,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_base64: Option<String>,
}

/// One fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub digest: String,
    pub source: SourceId,
    pub method: Method,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_sha256: Option<String>,
    pub response: StoredResponse,
}

impl FixtureRecord {
    pub fn new(request: &ApiRequest, response: &ApiResponse) -> Self {
        let (body, body_base64) = match std::str::from_utf8(&response.body) {
            Ok(text) => (Some(text.to_string()), None),
            Err(_) => (None, Some(base64::engine::general_purpose::STANDARD.encode(&response.body))),
        };
        Self {
            digest: request_digest(request),
            source: request.source,
            method: request.method,
            url: canonical_url(request.url()),
            body_sha256: request.body.as_deref().map(|b| sha256_hex(&canonical_body(b))),
            response: StoredResponse {
                status: response.status,
                content_kind: response.content_kind,
                latency_ms: response.latency_ms,
                body,
                body_base64,
            },
        }
    }

    pub fn to_response(&self) -> Result<ApiResponse, TransportError> {
        let body = match (&self.response.body, &self.response.body_base64) {
            (Some(text), _) => text.clone().into_bytes(),
            (None, Some(b64)) => base64::engine::general_purpose::STANDARD
                .decode(b64)
                .map_err(|e| TransportError::Fixture(format!("{}: bad base64: {e}", self.digest)))?,
            (None, None) => Vec::new(),
        };
        Ok(ApiResponse {
            status: self.response.status,
            content_kind: self.response.content_kind,
            body,
            latency_ms: self.response.latency_ms,
        })
    }
}

/// Transport decorator that records to or replays from a fixture directory.
pub struct FixtureStore {
    root: PathBuf,
    mode: FixtureMode,
    inner: Arc<dyn HttpTransport>,
    index: RwLock<HashMap<String, FixtureRecord>>,
}

impl FixtureStore {
    /// Opens `root`, loading any fixtures already present. `inner` is never
    /// called in replay mode.
    pub fn open(root: impl AsRef<Path>, mode: FixtureMode, inner: Arc<dyn HttpTransport>) -> Result<Self, TransportError> {
        let root = root.as_ref().to_path_buf();
        let mut index = HashMap::new();
        if root.is_dir() {
            for source in SourceId::ALL {
                let dir = root.join(source.as_str());
                if !dir.is_dir() {
                    continue;
                }
                for entry in fs::read_dir(&dir).map_err(|e| TransportError::Fixture(e.to_string()))? {
                    let path = entry.map_err(|e| TransportError::Fixture(e.to_string()))?.path();
                    if path.extension().is_some_and(|x| x == "json") {
                        let text = fs::read_to_string(&path).map_err(|e| TransportError::Fixture(e.to_string()))?;
                        let record: FixtureRecord = serde_json::from_str(&text)
                            .map_err(|e| TransportError::Fixture(format!("{}: {e}", path.display())))?;
                        index.insert(record.digest.clone(), record);
                    }
                }
            }
        } else if mode == FixtureMode::Replay {
            return Err(TransportError::Fixture(format!("fixture directory {} does not exist", root.display())));
        }
        Ok(Self { root, mode, inner, index: RwLock::new(index) })
    }

    pub fn mode(&self) -> FixtureMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("fixture lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `response` as the fixture for `request`, replacing any previous
    /// one atomically.
    pub fn store(&self, request: &ApiRequest, response: &ApiResponse) -> Result<FixtureRecord, TransportError> {
        let record = FixtureRecord::new(request, response);
        let dir = self.root.join(record.source.as_str());
        let mut index = self.index.write().expect("fixture lock");
        fs::create_dir_all(&dir).map_err(|e| TransportError::Fixture(e.to_string()))?;
        let json = serde_json::to_string_pretty(&record).expect("fixture serializes");
        let target = dir.join(format!("{}.json", record.digest));
        let tmp = dir.join(format!(".{}.json.tmp", record.digest));
        fs::write(&tmp, json)
            .and_then(|_| fs::rename(&tmp, &target))
            .map_err(|e| TransportError::Fixture(e.to_string()))?;
        index.insert(record.digest.clone(), record.clone());
        Ok(record)
    }
}

#[async_trait]
impl HttpTransport for FixtureStore {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        match self.mode {
            FixtureMode::Replay => {
                let digest = request_digest(request);
                let record = self.index.read().expect("fixture lock").get(&digest).cloned();
                match record {
                    Some(record) => record.to_response(),
                    None => Err(TransportError::FixtureMiss {
                        method: request.method.as_str().to_string(),
                        url: request.url().to_string(),
                        digest,
                    }),
                }
            }
            FixtureMode::Record => {
                let response = self.inner.execute(request).await?;
                self.store(request, &response)?;
                Ok(response)
            }
            FixtureMode::Passthrough => self.inner.execute(request).await,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{DenyingTransport, StubTransport};
    use proptest::prelude::*;

    #[test]
    fn canonical_url_sorts_and_drops_volatile() {
        let a = Url::parse("https://x.org/e?term=A&db=gene&api_key=SECRET&retmode=json").unwrap();
        let b = Url::parse("https://x.org/e?retmode=json&db=gene&term=A").unwrap();
        assert_eq!(canonical_url(&a), canonical_url(&b));
        assert!(!canonical_url(&a).contains("SECRET"));
    }

    #[test]
    fn digest_is_pinned() {
        // Frozen so that fixture file names stay valid across releases.
        let req = ApiRequest::get(SourceId::Hgnc, "https://rest.genenames.org/fetch/symbol/PSMB10").unwrap();
        assert_eq!(request_digest(&req), sha256_hex(b"GET\nhttps://rest.genenames.org/fetch/symbol/PSMB10\n"));
    }

    #[test]
    fn form_bodies_digest_independent_of_order() {
        let a = ApiRequest::post_form(SourceId::Blast, "https://b.org/Blast.cgi", &[("CMD", "Put"), ("QUERY", "ACGT")]).unwrap();
        let b = ApiRequest::post_form(SourceId::Blast, "https://b.org/Blast.cgi", &[("QUERY", "ACGT"), ("CMD", "Put")]).unwrap();
        let c = ApiRequest::post_form(SourceId::Blast, "https://b.org/Blast.cgi", &[("CMD", "Put"), ("QUERY", "ACGA")]).unwrap();
        assert_eq!(request_digest(&a), request_digest(&b));
        assert_ne!(request_digest(&a), request_digest(&c));
    }

    #[tokio::test]
    async fn record_then_replay_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let stub = Arc::new(StubTransport::new());
        stub.get_json("https://rest.genenames.org/fetch/symbol/A", r#"{"response":{"docs":[]}}"#);
        let recorder = FixtureStore::open(dir.path(), FixtureMode::Record, stub).unwrap();
        let req = ApiRequest::get(SourceId::Hgnc, "https://rest.genenames.org/fetch/symbol/A").unwrap();
        let live = recorder.execute(&req).await.unwrap();
        assert!(dir.path().join("HGNC").join(format!("{}.json", request_digest(&req))).is_file());

        let deny = Arc::new(DenyingTransport::new());
        let replay = FixtureStore::open(dir.path(), FixtureMode::Replay, deny.clone()).unwrap();
        assert_eq!(replay.execute(&req).await.unwrap(), live);

        let other = ApiRequest::get(SourceId::Hgnc, "https://rest.genenames.org/fetch/symbol/B").unwrap();
        assert!(matches!(replay.execute(&other).await, Err(TransportError::FixtureMiss { .. })));
        assert_eq!(deny.attempts(), 0);
    }

    #[test]
    fn binary_bodies_use_base64() {
        let req = ApiRequest::get(SourceId::Ucsc, "https://genome.ucsc.edu/x").unwrap();
        let resp = ApiResponse { status: 200, content_kind: ContentKind::Text, body: vec![0xff, 0xfe, 0], latency_ms: 1 };
        let rec = FixtureRecord::new(&req, &resp);
        assert!(rec.response.body.is_none());
        assert_eq!(rec.to_response().unwrap(), resp);
    }

    #[test]
    fn replay_requires_existing_directory() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none");
        assert!(FixtureStore::open(&missing, FixtureMode::Replay, Arc::new(DenyingTransport::new())).is_err());
    }

    proptest! {
        #[test]
        fn digest_stable_under_param_permutation(
            params in proptest::collection::btree_map("[a-z]{1,6}", "[A-Za-z0-9]{0,6}", 1..6),
            seed in any::<u64>(),
        ) {
            let mut pairs: Vec<(String, String)> = params.into_iter().collect();
            let url_a = Url::parse_with_params("https://eutils.ncbi.nlm.nih.gov/e", &pairs).unwrap();
            // deterministic shuffle
            let n = pairs.len();
            for i in 0..n {
                let j = ((seed >> (i % 64)) as usize + i) % n;
                pairs.swap(i, j);
            }
            let url_b = Url::parse_with_params("https://eutils.ncbi.nlm.nih.gov/e", &pairs).unwrap();
            let a = ApiRequest::get(SourceId::NcbiEutils, url_a.as_str()).unwrap();
            let b = ApiRequest::get(SourceId::NcbiEutils, url_b.as_str()).unwrap();
            prop_assert_eq!(request_digest(&a), request_digest(&b));
        }
    }
}

//! Importing hand-written request/response pairs into a fixture store.
//!
//! A manifest is a JSON array of entries:
//!
//! ```json
//! {"source": "HGNC", "method": "GET", "url": "https://rest.genenames.org/fetch/symbol/PSMB10",
//!  "params": [["k", "v"]], "form": [["CMD", "Put"]],
//!  "status": 200, "content_type": "application/json", "body_file": "bodies/hgnc_psmb10.json"}
//! ```
//!
//! `params` are appended to the URL query, `form` makes the request a POST
//! with a form body, and the body is given inline (`body`) or as a path
//! relative to the manifest (`body_file`).

use std::path::Path;

use genomagent_core::{ApiRequest, ApiResponse, Method, SourceId};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::DbError;
use crate::fixtures::{FixtureRecord, FixtureStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: SourceId,
    #[serde(default = "default_method")]
    pub method: Method,
    pub url: String,
    #[serde(default)]
    pub params: Vec<(String, String)>,
    #[serde(default)]
    pub form: Vec<(String, String)>,
    #[serde(default = "default_status")]
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Option<String>,
    pub body_file: Option<String>,
}

fn default_method() -> Method {
    Method::Get
}

fn default_status() -> u16 {
    200
}

impl ManifestEntry {
    pub fn request(&self) -> Result<ApiRequest, DbError> {
        let url = if self.params.is_empty() {
            Url::parse(&self.url)
        } else {
            Url::parse_with_params(&self.url, &self.params)
        }
        .map_err(|e| DbError::Precondition(format!("{}: {e}", self.url)))?;
        let invalid = |e: genomagent_core::api::InvalidUrl| DbError::Precondition(e.to_string());
        match self.method {
            Method::Get if self.form.is_empty() => ApiRequest::get(self.source, url.as_str()).map_err(invalid),
            Method::Post => {
                let form: Vec<(&str, &str)> = self.form.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
                ApiRequest::post_form(self.source, url.as_str(), &form).map_err(invalid)
            }
            Method::Get => Err(DbError::Precondition(format!("{}: GET entries cannot carry a form", self.url))),
        }
    }

    fn body_bytes(&self, base: &Path) -> Result<Vec<u8>, DbError> {
        match (&self.body, &self.body_file) {
            (Some(text), None) => Ok(text.clone().into_bytes()),
            (None, Some(file)) => std::fs::read(base.join(file))
                .map_err(|e| DbError::Precondition(format!("{}: {e}", base.join(file).display()))),
            _ => Err(DbError::Precondition(format!("{}: give exactly one of body or body_file", self.url))),
        }
    }
}

/// Writes one fixture per manifest entry. Returns the stored records.
pub fn import_manifest(manifest: &Path, store: &FixtureStore) -> Result<Vec<FixtureRecord>, DbError> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| DbError::Precondition(format!("{}: {e}", manifest.display())))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| DbError::Precondition(format!("{}: {e}", manifest.display())))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    entries
        .iter()
        .map(|entry| {
            let request = entry.request()?;
            let response = ApiResponse::new(entry.status, entry.content_type.as_deref(), entry.body_bytes(base)?, 0);
            Ok(store.store(&request, &response)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::FixtureMode;
    use crate::transport::{DenyingTransport, HttpTransport};
    use std::sync::Arc;

    #[tokio::test]
    async fn imported_entries_replay() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("body.json"), r#"{"response":{"docs":[]}}"#).unwrap();
        let manifest = dir.path().join("manifest.json");
        std::fs::write(
            &manifest,
            r#"[
              {"source":"HGNC","url":"https://rest.genenames.org/fetch/symbol/zzzz","content_type":"application/json","body_file":"body.json"},
              {"source":"BLAST","method":"POST","url":"https://blast.ncbi.nlm.nih.gov/Blast.cgi","form":[["CMD","Put"],["QUERY","ACGTACGTACGT"]],
               "content_type":"text/html","body":"RID = R1"}
            ]"#,
        )
        .unwrap();
        let root = dir.path().join("fixtures");
        let denying = Arc::new(DenyingTransport::new());
        let store = FixtureStore::open(&root, FixtureMode::Record, denying.clone()).unwrap();
        assert_eq!(import_manifest(&manifest, &store).unwrap().len(), 2);

        let replay = FixtureStore::open(&root, FixtureMode::Replay, denying.clone()).unwrap();
        let get = ApiRequest::get(SourceId::Hgnc, "https://rest.genenames.org/fetch/symbol/zzzz").unwrap();
        assert_eq!(replay.execute(&get).await.unwrap().text(), r#"{"response":{"docs":[]}}"#);
        let post = ApiRequest::post_form(
            SourceId::Blast,
            "https://blast.ncbi.nlm.nih.gov/Blast.cgi",
            &[("QUERY", "ACGTACGTACGT"), ("CMD", "Put")],
        )
        .unwrap();
        assert_eq!(replay.execute(&post).await.unwrap().text(), "RID = R1");
        assert_eq!(denying.attempts(), 0);
    }

    #[test]
    fn body_must_be_given_once() {
        let e: ManifestEntry = serde_json::from_str(r#"{"source":"HGNC","url":"https://a.org/x","body":"a","body_file":"b"}"#).unwrap();
        assert!(e.body_bytes(Path::new(".")).is_err());
    }
}

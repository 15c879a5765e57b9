use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use url::Url;

/// The biomedical data sources the engine knows how to query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceId {
    NcbiEutils,
    Blast,
    Hgnc,
    Ucsc,
}

impl SourceId {
    pub const ALL: [SourceId; 4] = [SourceId::NcbiEutils, SourceId::Blast, SourceId::Hgnc, SourceId::Ucsc];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceId::NcbiEutils => "NCBI_EUTILS",
            SourceId::Blast => "BLAST",
            SourceId::Hgnc => "HGNC",
            SourceId::Ucsc => "UCSC",
        }
    }

    /// Guesses the source from a URL host; used when an LLM emits raw URLs.
    pub fn from_host(host: &str) -> Option<SourceId> {
        let host = host.to_ascii_lowercase();
        if host.starts_with("eutils.") {
            Some(SourceId::NcbiEutils)
        } else if host.starts_with("blast.") {
            Some(SourceId::Blast)
        } else if host.ends_with("genenames.org") {
            Some(SourceId::Hgnc)
        } else if host.ends_with("ucsc.edu") {
            Some(SourceId::Ucsc)
        } else {
            None
        }
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown source id {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ContentKind {
    Json,
    Html,
    Xml,
    Text,
}

impl ContentKind {
    /// Uses the declared `Content-Type` when it is decisive, otherwise sniffs
    /// the first non-whitespace bytes of the body.
    pub fn infer(content_type: Option<&str>, body: &[u8]) -> ContentKind {
        if let Some(ct) = content_type {
            let ct = ct.to_ascii_lowercase();
            if ct.contains("json") {
                return ContentKind::Json;
            }
            if ct.contains("html") {
                return ContentKind::Html;
            }
            if ct.contains("xml") {
                return ContentKind::Xml;
            }
        }
        Self::sniff(body)
    }

    pub fn sniff(body: &[u8]) -> ContentKind {
        let start = body.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(body.len());
        let head = &body[start..body.len().min(start + 512)];
        let lower = String::from_utf8_lossy(head).to_ascii_lowercase();
        if lower.starts_with('{') || lower.starts_with('[') {
            ContentKind::Json
        } else if lower.starts_with("<!doctype html") || lower.starts_with("<html") || lower.contains("<body") {
            ContentKind::Html
        } else if lower.starts_with("<?xml") || lower.starts_with("<!doctype") {
            ContentKind::Xml
        } else if lower.starts_with('<') {
            ContentKind::Html
        } else {
            ContentKind::Text
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid request URL {url:?}: {reason}")]
pub struct InvalidUrl {
    pub url: String,
    pub reason: String,
}

/// One outbound call to a data source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub source: SourceId,
    pub method: Method,
    url: Url,
    pub body: Option<Vec<u8>>,
    pub headers: Vec<(String, String)>,
}

impl ApiRequest {
    pub fn get(source: SourceId, url: &str) -> Result<Self, InvalidUrl> {
        Ok(Self { source, method: Method::Get, url: parse_absolute(url)?, body: None, headers: Vec::new() })
    }

    pub fn post_form(source: SourceId, url: &str, form: &[(&str, &str)]) -> Result<Self, InvalidUrl> {
        let body = url::form_urlencoded::Serializer::new(String::new()).extend_pairs(form).finish();
        Ok(Self {
            source,
            method: Method::Post,
            url: parse_absolute(url)?,
            body: Some(body.into_bytes()),
            headers: vec![("Content-Type".into(), "application/x-www-form-urlencoded".into())],
        })
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn url(&self) -> &Url {
        &self.url
    }
}

fn parse_absolute(raw: &str) -> Result<Url, InvalidUrl> {
    let url = Url::parse(raw).map_err(|e| InvalidUrl { url: raw.to_string(), reason: e.to_string() })?;
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return Err(InvalidUrl { url: raw.to_string(), reason: "expected an absolute http(s) URL".into() });
    }
    Ok(url)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_kind: ContentKind,
    pub body: Vec<u8>,
    pub latency_ms: u64,
}

impl ApiResponse {
    pub fn new(status: u16, content_type: Option<&str>, body: Vec<u8>, latency_ms: u64) -> Self {
        let content_kind = ContentKind::infer(content_type, &body);
        Self { status, content_kind, body, latency_ms }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.body)
    }
}

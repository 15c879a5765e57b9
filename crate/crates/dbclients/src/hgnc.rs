//! HGNC REST `fetch` endpoint, JSON only.

use std::sync::Arc;

use genomagent_core::{ApiRequest, SourceId};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::DbError;
use crate::transport::{ApiExchange, HttpTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HgncField {
    Symbol,
    AliasSymbol,
    PrevSymbol,
}

impl HgncField {
    pub fn as_str(self) -> &'static str {
        match self {
            HgncField::Symbol => "symbol",
            HgncField::AliasSymbol => "alias_symbol",
            HgncField::PrevSymbol => "prev_symbol",
        }
    }
}

impl std::str::FromStr for HgncField {
    type Err = DbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symbol" => Ok(HgncField::Symbol),
            "alias_symbol" => Ok(HgncField::AliasSymbol),
            "prev_symbol" => Ok(HgncField::PrevSymbol),
            other => Err(DbError::Precondition(format!("unsupported HGNC field {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HgncRecord {
    pub symbol: String,
    pub name: Option<String>,
    pub aliases: Vec<String>,
    pub prev_symbols: Vec<String>,
    pub location: Option<String>,
    pub locus_group: Option<String>,
}

#[derive(Clone)]
pub struct HgncClient {
    transport: Arc<dyn HttpTransport>,
    base: String,
}

impl HgncClient {
    pub fn new(transport: Arc<dyn HttpTransport>, base: &str) -> Self {
        let base = if base.ends_with('/') { base.to_string() } else { format!("{base}/") };
        Self { transport, base }
    }

    pub async fn fetch_raw(&self, field: HgncField, value: &str) -> Result<ApiExchange, DbError> {
        let value = value.trim();
        if value.is_empty() {
            return Err(DbError::Precondition("HGNC lookup value is empty".into()));
        }
        let mut url = url::Url::parse(&self.base).map_err(|e| DbError::Precondition(e.to_string()))?;
        url.path_segments_mut()
            .map_err(|_| DbError::Precondition("HGNC base URL cannot take a path".into()))?
            .pop_if_empty()
            .extend(["fetch", field.as_str(), value]);
        let request = ApiRequest::get(SourceId::Hgnc, url.as_str())
            .map_err(|e| DbError::Precondition(e.to_string()))?
            .with_header("Accept", "application/json");
        let response = self.transport.execute(&request).await?;
        if !response.is_success() {
            return Err(DbError::Http { status: response.status, url: url.to_string() });
        }
        Ok(ApiExchange { request, response })
    }

    pub async fn fetch(&self, field: HgncField, value: &str) -> Result<Vec<HgncRecord>, DbError> {
        let exchange = self.fetch_raw(field, value).await?;
        parse_fetch(&exchange.response.body)
    }
}

pub fn parse_fetch(body: &[u8]) -> Result<Vec<HgncRecord>, DbError> {
    let malformed = |m: String| DbError::MalformedResponse(format!("HGNC fetch: {m}"));
    let doc: Value = serde_json::from_slice(body).map_err(|e| malformed(e.to_string()))?;
    let docs = doc
        .pointer("/response/docs")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing response.docs".into()))?;
    docs.iter()
        .map(|d| {
            let text = |k: &str| d.get(k).and_then(Value::as_str).map(str::to_string);
            let list = |k: &str| {
                d.get(k)
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
                    .unwrap_or_default()
            };
            Ok(HgncRecord {
                symbol: text("symbol").ok_or_else(|| malformed("doc without symbol".into()))?,
                name: text("name"),
                aliases: list("alias_symbol"),
                prev_symbols: list("prev_symbol"),
                location: text("location"),
                locus_group: text("locus_group"),
            })
        })
        .collect()
}

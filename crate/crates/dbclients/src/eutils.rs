use std::str::FromStr;
use std::sync::Arc;

use genomagent_core::{ApiRequest, SourceId};
use serde_json::Value;
use url::Url;

use crate::error::DbError;
use crate::transport::{ApiExchange, HttpTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EutilsDb {
    Gene,
    Snp,
    Omim,
}

impl EutilsDb {
    pub fn as_str(self) -> &'static str {
        match self {
            EutilsDb::Gene => "gene",
            EutilsDb::Snp => "snp",
            EutilsDb::Omim => "omim",
        }
    }
}

impl FromStr for EutilsDb {
    type Err = DbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gene" => Ok(EutilsDb::Gene),
            "snp" => Ok(EutilsDb::Snp),
            "omim" => Ok(EutilsDb::Omim),
            other => Err(DbError::Precondition(format!("unsupported E-utilities database {other:?}"))),
        }
    }
}

/// esearch / esummary over JSON.
#[derive(Clone)]
pub struct EutilsClient {
    transport: Arc<dyn HttpTransport>,
    base: String,
    api_key: Option<String>,
    retmax: u32,
}

impl EutilsClient {
    pub fn new(transport: Arc<dyn HttpTransport>, base: &str) -> Self {
        let base = if base.ends_with('/') { base.to_string() } else { format!("{base}/") };
        Self { transport, base, api_key: std::env::var("NCBI_API_KEY").ok(), retmax: 20 }
    }

    fn url(&self, tool: &str, params: &[(&str, &str)]) -> Result<String, DbError> {
        let mut pairs: Vec<(&str, &str)> = params.to_vec();
        if let Some(key) = &self.api_key {
            pairs.push(("api_key", key));
        }
        Url::parse_with_params(&format!("{}{tool}", self.base), &pairs)
            .map(|u| u.to_string())
            .map_err(|e| DbError::Precondition(e.to_string()))
    }

    async fn get(&self, url: &str) -> Result<ApiExchange, DbError> {
        let request = ApiRequest::get(SourceId::NcbiEutils, url).map_err(|e| DbError::Precondition(e.to_string()))?;
        let response = self.transport.execute(&request).await?;
        if !response.is_success() {
            return Err(DbError::Http { status: response.status, url: url.to_string() });
        }
        Ok(ApiExchange { request, response })
    }

    pub async fn search_raw(&self, db: &str, term: &str) -> Result<ApiExchange, DbError> {
        let db: EutilsDb = db.parse()?;
        if term.trim().is_empty() {
            return Err(DbError::Precondition("search term is empty".into()));
        }
        let retmax = self.retmax.to_string();
        let url = self.url(
            "esearch.fcgi",
            &[("db", db.as_str()), ("term", term), ("retmode", "json"), ("retmax", &retmax)],
        )?;
        self.get(&url).await
    }

    /// Record ids matching `term`, in response order.
    pub async fn search(&self, db: &str, term: &str) -> Result<Vec<String>, DbError> {
        let exchange = self.search_raw(db, term).await?;
        parse_search(&exchange.response.body)
    }

    pub async fn summary_raw(&self, db: &str, ids: &[String]) -> Result<ApiExchange, DbError> {
        let db: EutilsDb = db.parse()?;
        if ids.is_empty() {
            return Err(DbError::Precondition("esummary needs at least one id".into()));
        }
        let joined = ids.join(",");
        let url = self.url("esummary.fcgi", &[("db", db.as_str()), ("id", &joined), ("retmode", "json")])?;
        self.get(&url).await
    }

    pub async fn summary(&self, db: &str, ids: &[String]) -> Result<Value, DbError> {
        let exchange = self.summary_raw(db, ids).await?;
        parse_summary(&exchange.response.body)
    }

    /// esearch followed by esummary over the hits. `None` when the search
    /// found nothing.
    pub async fn search_summary_raw(&self, db: &str, term: &str) -> Result<(Vec<String>, Option<ApiExchange>), DbError> {
        let ids = self.search(db, term).await?;
        if ids.is_empty() {
            return Ok((ids, None));
        }
        let exchange = self.summary_raw(db, &ids).await?;
        parse_summary(&exchange.response.body)?;
        Ok((ids, Some(exchange)))
    }
}

pub fn parse_search(body: &[u8]) -> Result<Vec<String>, DbError> {
    let doc: Value = serde_json::from_slice(body).map_err(|e| DbError::MalformedResponse(format!("esearch: {e}")))?;
    let idlist = doc
        .pointer("/esearchresult/idlist")
        .and_then(Value::as_array)
        .ok_or_else(|| DbError::MalformedResponse("esearch: missing esearchresult.idlist".into()))?;
    idlist
        .iter()
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| DbError::MalformedResponse("esearch: non-string id".into())))
        .collect()
}

pub fn parse_summary(body: &[u8]) -> Result<Value, DbError> {
    let doc: Value = serde_json::from_slice(body).map_err(|e| DbError::MalformedResponse(format!("esummary: {e}")))?;
    if !doc.get("result").is_some_and(Value::is_object) {
        return Err(DbError::MalformedResponse("esummary: missing result object".into()));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::StubTransport;

    const BASE: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";

    fn client(stub: Arc<StubTransport>) -> EutilsClient {
        let mut c = EutilsClient::new(stub, BASE);
        c.api_key = None;
        c
    }

    #[tokio::test]
    async fn search_returns_ids_in_order() {
        let stub = Arc::new(StubTransport::new());
        stub.get_json(
            &format!("{BASE}esearch.fcgi?db=gene&term=LMP10&retmode=json&retmax=20"),
            r#"{"header":{},"esearchresult":{"count":"2","idlist":["5699","19171"]}}"#,
        );
        let ids = client(stub).search("gene", "LMP10").await.unwrap();
        assert_eq!(ids, vec!["5699", "19171"]);
    }

    #[tokio::test]
    async fn preconditions() {
        let c = client(Arc::new(StubTransport::new()));
        assert!(matches!(c.search("protein", "x").await, Err(DbError::Precondition(_))));
        assert!(matches!(c.search("gene", " ").await, Err(DbError::Precondition(_))));
        assert!(matches!(c.summary("gene", &[]).await, Err(DbError::Precondition(_))));
    }

    #[test]
    fn truncated_bodies_are_malformed() {
        let full = br#"{"esearchresult":{"idlist":["1"]}}"#;
        assert!(parse_search(full).is_ok());
        for cut in 1..full.len() {
            assert!(matches!(parse_search(&full[..cut]), Err(DbError::MalformedResponse(_))), "cut {cut}");
        }
        assert!(parse_summary(br#"{"result":{"uids":[]}}"#).is_ok());
        assert!(parse_summary(br#"{"error":"bad"}"#).is_err());
    }

    #[tokio::test]
    async fn http_errors_surface() {
        let stub = Arc::new(StubTransport::new());
        stub.route(
            genomagent_core::Method::Get,
            &format!("{BASE}esummary.fcgi?db=gene&id=1&retmode=json"),
            500,
            None,
            "oops",
        );
        let err = client(stub).summary("gene", &["1".into()]).await.unwrap_err();
        assert!(matches!(err, DbError::Http { status: 500, .. }));
    }
}

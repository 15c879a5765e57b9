//! UCSC BLAT against a reference assembly.
//!
//! BLAT reports target coordinates zero-based and half-open; [`BlatHit`]
//! stores them one-based and inclusive so they compare directly with
//! `chrN:start-end` answers.

use std::sync::Arc;

use genomagent_core::{ApiRequest, SourceId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use url::Url;

use crate::error::DbError;
use crate::transport::{ApiExchange, HttpTransport};

pub const MIN_BLAT_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlatHit {
    pub chromosome: String,
    pub start: u64,
    pub end: u64,
    pub score: i64,
    pub strand: String,
}

#[derive(Clone)]
pub struct UcscClient {
    transport: Arc<dyn HttpTransport>,
    base: String,
}

impl UcscClient {
    pub fn new(transport: Arc<dyn HttpTransport>, base: &str) -> Self {
        Self { transport, base: base.to_string() }
    }

    fn request(&self, sequence: &str, db: &str, json: bool) -> Result<ApiRequest, DbError> {
        let seq = crate::check_dna(sequence, MIN_BLAT_LEN)?;
        let mut params = vec![("userSeq", seq.as_str()), ("type", "DNA"), ("db", db)];
        if json {
            params.push(("output", "json"));
        }
        let url = Url::parse_with_params(&self.base, &params).map_err(|e| DbError::Precondition(e.to_string()))?;
        ApiRequest::get(SourceId::Ucsc, url.as_str()).map_err(|e| DbError::Precondition(e.to_string()))
    }

    async fn send(&self, request: ApiRequest) -> Result<ApiExchange, DbError> {
        let response = self.transport.execute(&request).await?;
        if !response.is_success() {
            return Err(DbError::Http { status: response.status, url: request.url().to_string() });
        }
        Ok(ApiExchange { request, response })
    }

    /// JSON output (`output=json`).
    pub async fn blat_raw(&self, sequence: &str, db: &str) -> Result<ApiExchange, DbError> {
        self.send(self.request(sequence, db, true)?).await
    }

    /// The default HTML results page.
    pub async fn blat_html(&self, sequence: &str, db: &str) -> Result<ApiExchange, DbError> {
        self.send(self.request(sequence, db, false)?).await
    }

    pub async fn blat(&self, sequence: &str, db: &str) -> Result<Vec<BlatHit>, DbError> {
        let exchange = self.blat_raw(sequence, db).await?;
        parse_blat(&exchange.response.body)
    }
}

/// Parses `{"fields":[...],"blat":[[...],...]}` into hits, best score first.
pub fn parse_blat(body: &[u8]) -> Result<Vec<BlatHit>, DbError> {
    let malformed = |m: String| DbError::MalformedResponse(format!("BLAT: {m}"));
    let doc: Value = serde_json::from_slice(body).map_err(|e| malformed(e.to_string()))?;
    let fields: Vec<&str> = doc
        .get("fields")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing fields".into()))?
        .iter()
        .filter_map(Value::as_str)
        .collect();
    let rows = doc.get("blat").and_then(Value::as_array).ok_or_else(|| malformed("missing blat".into()))?;
    let col = |name: &str| fields.iter().position(|f| *f == name).ok_or_else(|| malformed(format!("no {name} column")));
    let (t_name, t_start, t_end, strand) = (col("tName")?, col("tStart")?, col("tEnd")?, col("strand")?);
    let (matches, rep, mis, q_ins, t_ins) =
        (col("matches")?, col("repMatches")?, col("misMatches")?, col("qNumInsert")?, col("tNumInsert")?);

    let mut hits = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(|| malformed("row is not an array".into()))?;
        let int = |i: usize| row.get(i).and_then(Value::as_i64).ok_or_else(|| malformed(format!("bad integer in column {i}")));
        let start = u64::try_from(int(t_start)?).map_err(|_| malformed("negative tStart".into()))?;
        let end = u64::try_from(int(t_end)?).map_err(|_| malformed("negative tEnd".into()))?;
        hits.push(BlatHit {
            chromosome: row.get(t_name).and_then(Value::as_str).unwrap_or_default().to_string(),
            start: start + 1,
            end,
            score: int(matches)? + int(rep)? / 2 - int(mis)? - int(q_ins)? - int(t_ins)?,
            strand: row.get(strand).and_then(Value::as_str).unwrap_or("+").to_string(),
        });
    }
    hits.sort_by(|a, b| b.score.cmp(&a.score));
    Ok(hits)
}

//! NCBI BLAST URL API: `CMD=Put` submits and returns an RID, `CMD=Get`
//! polls status and finally fetches the JSON2_S report.

use std::sync::{Arc, LazyLock};
use std::time::Duration;

use genomagent_core::{ApiRequest, SourceId};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use url::Url;

use crate::error::DbError;
use crate::transport::{ApiExchange, HttpTransport};

static RID_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"RID\s*=\s*([A-Za-z0-9\-]+)").unwrap());
static STATUS_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"Status=([A-Z]+)").unwrap());
static TITLE_CHROM_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)chromosome\s+([0-9]+|[XYM]|MT)\b").unwrap());
static REFSEQ_CHROM_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^NC_0000(\d{2})").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlastProgram {
    Blastn,
    Megablast,
}

impl std::str::FromStr for BlastProgram {
    type Err = DbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "blastn" => Ok(BlastProgram::Blastn),
            "megablast" => Ok(BlastProgram::Megablast),
            other => Err(DbError::Precondition(format!("unsupported BLAST program {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlastStatus {
    Waiting,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlastJob {
    pub rid: String,
    status: BlastStatus,
    pub poll_count: u32,
}

impl BlastJob {
    pub fn new(rid: impl Into<String>) -> Self {
        Self { rid: rid.into(), status: BlastStatus::Waiting, poll_count: 0 }
    }

    pub fn status(&self) -> BlastStatus {
        self.status
    }

    /// Only `Waiting -> Ready` and `Waiting -> Failed` are allowed; anything
    /// else leaves the job unchanged and returns false.
    pub fn transition(&mut self, to: BlastStatus) -> bool {
        if self.status == BlastStatus::Waiting && to != BlastStatus::Waiting {
            self.status = to;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentHit {
    pub accession: String,
    pub title: String,
    pub organism: Option<String>,
    pub chromosome: Option<String>,
    pub start: u64,
    pub end: u64,
    pub bit_score: f64,
    pub evalue: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlastReport {
    /// Sorted by bit score, best first.
    pub hits: Vec<AlignmentHit>,
}

impl BlastReport {
    pub fn best(&self) -> Option<&AlignmentHit> {
        self.hits.first()
    }
}

#[derive(Clone)]
pub struct BlastClient {
    transport: Arc<dyn HttpTransport>,
    base: String,
    pub poll_interval: Duration,
}

impl BlastClient {
    pub const LIVE_POLL_INTERVAL: Duration = Duration::from_secs(10);

    pub fn new(transport: Arc<dyn HttpTransport>, base: &str) -> Self {
        Self { transport, base: base.to_string(), poll_interval: Self::LIVE_POLL_INTERVAL }
    }

    pub fn with_poll_interval(mut self, interval: Duration) -> Self {
        self.poll_interval = interval;
        self
    }

    async fn send(&self, request: ApiRequest) -> Result<ApiExchange, DbError> {
        let response = self.transport.execute(&request).await?;
        if !response.is_success() {
            return Err(DbError::Http { status: response.status, url: request.url().to_string() });
        }
        Ok(ApiExchange { request, response })
    }

    fn get_url(&self, params: &[(&str, &str)]) -> Result<String, DbError> {
        Url::parse_with_params(&self.base, params)
            .map(|u| u.to_string())
            .map_err(|e| DbError::Precondition(e.to_string()))
    }

    pub async fn submit(&self, sequence: &str, program: BlastProgram, database: &str) -> Result<BlastJob, DbError> {
        let seq = crate::check_dna(sequence, 11)?;
        let mut form = vec![("CMD", "Put"), ("PROGRAM", "blastn"), ("DATABASE", database), ("QUERY", seq.as_str())];
        if program == BlastProgram::Megablast {
            form.push(("MEGABLAST", "on"));
        }
        let request = ApiRequest::post_form(SourceId::Blast, &self.base, &form)
            .map_err(|e| DbError::Precondition(e.to_string()))?;
        let exchange = self.send(request).await?;
        let rid = parse_rid(&exchange.response.text()).ok_or(DbError::RidNotFound)?;
        Ok(BlastJob::new(rid))
    }

    /// Polls until the job is ready, then returns the raw JSON2_S exchange.
    pub async fn poll_raw(&self, job: &mut BlastJob, max_polls: u32, interval: Duration) -> Result<ApiExchange, DbError> {
        match job.status {
            BlastStatus::Failed => return Err(DbError::JobFailed(job.rid.clone())),
            BlastStatus::Ready => return self.fetch_report(&job.rid).await,
            BlastStatus::Waiting => {}
        }
        for attempt in 0..max_polls {
            if attempt > 0 && !interval.is_zero() {
                tokio::time::sleep(interval).await;
            }
            job.poll_count += 1;
            let url = self.get_url(&[("CMD", "Get"), ("FORMAT_OBJECT", "SearchInfo"), ("RID", &job.rid)])?;
            let request = ApiRequest::get(SourceId::Blast, &url).map_err(|e| DbError::Precondition(e.to_string()))?;
            let exchange = self.send(request).await?;
            match parse_status(&exchange.response.text()) {
                Some("READY") => {
                    job.transition(BlastStatus::Ready);
                    return self.fetch_report(&job.rid).await;
                }
                Some("FAILED") | Some("UNKNOWN") => {
                    job.transition(BlastStatus::Failed);
                    return Err(DbError::JobFailed(job.rid.clone()));
                }
                Some(_) => {}
                None => return Err(DbError::MalformedResponse("BLAST SearchInfo without Status".into())),
            }
        }
        Err(DbError::Timeout { rid: job.rid.clone(), polls: job.poll_count })
    }

    pub async fn poll(&self, job: &mut BlastJob, max_polls: u32, interval: Duration) -> Result<BlastReport, DbError> {
        let exchange = self.poll_raw(job, max_polls, interval).await?;
        parse_report(&exchange.response.body)
    }

    async fn fetch_report(&self, rid: &str) -> Result<ApiExchange, DbError> {
        let url = self.get_url(&[("CMD", "Get"), ("FORMAT_TYPE", "JSON2_S"), ("RID", rid)])?;
        let request = ApiRequest::get(SourceId::Blast, &url).map_err(|e| DbError::Precondition(e.to_string()))?;
        let exchange = self.send(request).await?;
        parse_report(&exchange.response.body)?;
        Ok(exchange)
    }
}

pub fn parse_rid(body: &str) -> Option<String> {
    RID_RE.captures(body).map(|c| c[1].to_string())
}

fn parse_status(body: &str) -> Option<&str> {
    STATUS_RE.captures(body).and_then(|c| c.get(1)).map(|m| m.as_str())
}

fn chromosome_of(title: &str, accession: &str) -> Option<String> {
    if let Some(c) = TITLE_CHROM_RE.captures(title) {
        let label = c[1].to_uppercase();
        return Some(format!("chr{}", if label == "MT" { "M".to_string() } else { label }));
    }
    REFSEQ_CHROM_RE.captures(accession).and_then(|c| {
        let n: u32 = c[1].parse().ok()?;
        Some(match n {
            1..=22 => format!("chr{n}"),
            23 => "chrX".into(),
            24 => "chrY".into(),
            _ => return None,
        })
    })
}

/// Parses a JSON2_S report into hits ordered by bit score.
pub fn parse_report(body: &[u8]) -> Result<BlastReport, DbError> {
    let malformed = |m: &str| DbError::MalformedResponse(format!("BLAST report: {m}"));
    let doc: Value = serde_json::from_slice(body).map_err(|e| malformed(&e.to_string()))?;
    let hits = doc
        .pointer("/BlastOutput2/0/report/results/search/hits")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing results.search.hits"))?;
    let mut out = Vec::with_capacity(hits.len());
    for hit in hits {
        let desc = hit.pointer("/description/0").ok_or_else(|| malformed("hit without description"))?;
        let text = |v: &Value, k: &str| v.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
        let accession = text(desc, "accession");
        let title = text(desc, "title");
        let organism = desc.get("sciname").and_then(Value::as_str).map(str::to_string);
        let best = hit
            .get("hsps")
            .and_then(Value::as_array)
            .and_then(|hsps| {
                hsps.iter().max_by(|a, b| {
                    let s = |h: &Value| h.get("bit_score").and_then(Value::as_f64).unwrap_or(f64::MIN);
                    s(a).total_cmp(&s(b))
                })
            })
            .ok_or_else(|| malformed("hit without hsps"))?;
        let num = |k: &str| best.get(k).and_then(Value::as_u64).ok_or_else(|| malformed(&format!("hsp missing {k}")));
        let (from, to) = (num("hit_from")?, num("hit_to")?);
        out.push(AlignmentHit {
            chromosome: chromosome_of(&title, &accession),
            accession,
            title,
            organism,
            start: from.min(to),
            end: from.max(to),
            bit_score: best.get("bit_score").and_then(Value::as_f64).unwrap_or(0.0),
            evalue: best.get("evalue").and_then(Value::as_f64).unwrap_or(f64::INFINITY),
        });
    }
    out.sort_by(|a, b| b.bit_score.total_cmp(&a.bit_score));
    Ok(BlastReport { hits: out })
}

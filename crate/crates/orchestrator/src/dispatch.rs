//! Parallel fan-out of one question's workflow to its sources.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use futures::future::join_all;
use genomagent_core::{ApiCallRecord, ApiRequest, ApiResponse, ContentKind, SourceId};
use genomagent_db::{
    BlastProgram, DbClients, DbError, Endpoints, HgncField, HttpTransport, TransportError,
};
use serde_json::Value;
use tokio::sync::Semaphore;

use crate::config::{BlatFormat, Endpoint};
use crate::error::OrchError;

/// What one source produced.
#[derive(Debug, Clone)]
pub struct SourceFetch {
    /// Every HTTP exchange made, in order.
    pub calls: Vec<ApiCallRecord>,
    /// The response to extract from; `None` when the source found nothing.
    pub response: Option<ApiResponse>,
    /// How many records the final response holds, when it can be counted.
    pub result_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SourceFailure {
    pub calls: Vec<ApiCallRecord>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SourceResult {
    pub index: usize,
    pub source: SourceId,
    pub elapsed_ms: u64,
    pub outcome: Result<SourceFetch, SourceFailure>,
}

/// Runs one bound endpoint. Implementations must not panic; failures go in
/// the `Err` side together with whatever calls were made.
#[async_trait]
pub trait SourceExecutor: Send + Sync {
    async fn execute(&self, source: SourceId, endpoint: &Endpoint) -> Result<SourceFetch, SourceFailure>;
}

/// Wraps a transport and keeps a record of every exchange.
struct RecordingTransport {
    inner: Arc<dyn HttpTransport>,
    log: Mutex<Vec<ApiCallRecord>>,
}

fn record_of(request: &ApiRequest, outcome: &Result<ApiResponse, TransportError>) -> ApiCallRecord {
    let (status, error, bytes, body) = match outcome {
        Ok(r) => (Some(r.status), None, r.body.len(), Some(r.text().into_owned())),
        Err(e) => (None, Some(e.to_string()), 0, None),
    };
    ApiCallRecord {
        source: request.source,
        method: request.method,
        url: request.url().to_string(),
        status,
        error,
        bytes,
        result_count: None,
        body,
    }
}

#[async_trait]
impl HttpTransport for RecordingTransport {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        let outcome = self.inner.execute(request).await;
        self.log.lock().expect("log lock").push(record_of(request, &outcome));
        outcome
    }
}

/// The real executor: calls the database clients over a shared transport.
pub struct DbExecutor {
    transport: Arc<dyn HttpTransport>,
    endpoints: Endpoints,
    pub blast_max_polls: u32,
    pub blast_poll_interval: Duration,
}

impl DbExecutor {
    pub fn new(transport: Arc<dyn HttpTransport>, endpoints: Endpoints) -> Self {
        Self { transport, endpoints, blast_max_polls: 60, blast_poll_interval: Duration::from_secs(10) }
    }

    pub fn with_blast_polling(mut self, max_polls: u32, interval: Duration) -> Self {
        self.blast_max_polls = max_polls;
        self.blast_poll_interval = interval;
        self
    }

    async fn run(&self, clients: &DbClients, endpoint: &Endpoint) -> Result<(Option<ApiResponse>, Option<usize>), DbError> {
        match endpoint {
            Endpoint::EsearchEsummary { db, term } => {
                let (ids, exchange) = clients.eutils.search_summary_raw(db, term).await?;
                Ok((exchange.map(|x| x.response), Some(ids.len())))
            }
            Endpoint::Esummary { db, id } => {
                let exchange = clients.eutils.summary_raw(db, &[id.clone()]).await?;
                let count = count_esummary(&exchange.response.body);
                Ok((Some(exchange.response), Some(count)))
            }
            Endpoint::Blast { program, database, sequence } => {
                let program: BlastProgram = program.parse()?;
                let client = clients.blast.clone().with_poll_interval(self.blast_poll_interval);
                let mut job = client.submit(sequence, program, database).await?;
                let exchange = client.poll_raw(&mut job, self.blast_max_polls, self.blast_poll_interval).await?;
                let count = genomagent_db::blast::parse_report(&exchange.response.body)?.hits.len();
                Ok((Some(exchange.response), Some(count)))
            }
            Endpoint::HgncFetch { field, value } => {
                let field: HgncField = field.parse()?;
                let exchange = clients.hgnc.fetch_raw(field, value).await?;
                let count = genomagent_db::hgnc::parse_fetch(&exchange.response.body)?.len();
                Ok((Some(exchange.response), Some(count)))
            }
            Endpoint::UcscBlat { sequence, db, format } => match format {
                BlatFormat::Json => {
                    let exchange = clients.ucsc.blat_raw(sequence, db).await?;
                    let count = genomagent_db::ucsc::parse_blat(&exchange.response.body)?.len();
                    Ok((Some(exchange.response), Some(count)))
                }
                BlatFormat::Html => {
                    let exchange = clients.ucsc.blat_html(sequence, db).await?;
                    Ok((Some(exchange.response), None))
                }
            },
        }
    }
}

fn count_esummary(body: &[u8]) -> usize {
    serde_json::from_slice::<Value>(body)
        .ok()
        .and_then(|v| v.pointer("/result/uids").and_then(Value::as_array).map(Vec::len))
        .unwrap_or(0)
}

#[async_trait]
impl SourceExecutor for DbExecutor {
    async fn execute(&self, _source: SourceId, endpoint: &Endpoint) -> Result<SourceFetch, SourceFailure> {
        let recorder = Arc::new(RecordingTransport { inner: self.transport.clone(), log: Mutex::new(Vec::new()) });
        let clients = DbClients::new(recorder.clone(), &self.endpoints);
        let outcome = self.run(&clients, endpoint).await;
        let mut calls = std::mem::take(&mut *recorder.log.lock().expect("log lock"));
        match outcome {
            Ok((response, result_count)) => {
                if let Some(last) = calls.last_mut() {
                    last.result_count = result_count;
                }
                Ok(SourceFetch { calls, response, result_count })
            }
            Err(e) => {
                // A parse failure on a 200 response is still a failed call.
                if let Some(last) = calls.last_mut() {
                    if last.error.is_none() && matches!(e, DbError::MalformedResponse(_) | DbError::RidNotFound | DbError::Http { .. }) {
                        last.error = Some(e.to_string());
                    }
                }
                Err(SourceFailure { calls, message: e.to_string() })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DispatchSettings {
    pub parallelism: usize,
    pub per_source_timeout: Duration,
}

impl Default for DispatchSettings {
    fn default() -> Self {
        Self { parallelism: 4, per_source_timeout: Duration::from_secs(30) }
    }
}

/// Queries every source concurrently (at most `parallelism` at a time) and
/// waits for all of them. Results come back in input order.
pub async fn dispatch(
    sources: &[(SourceId, Endpoint)],
    executor: &dyn SourceExecutor,
    settings: DispatchSettings,
) -> Result<Vec<SourceResult>, OrchError> {
    let results = dispatch_all(sources, executor, settings).await;
    if results.iter().all(|r| r.outcome.is_err()) {
        return Err(OrchError::AllSourcesFailed);
    }
    Ok(results)
}

/// Like [`dispatch`], but hands back the per-source failures even when
/// nothing succeeded.
pub async fn dispatch_all(
    sources: &[(SourceId, Endpoint)],
    executor: &dyn SourceExecutor,
    settings: DispatchSettings,
) -> Vec<SourceResult> {
    let permits = Semaphore::new(settings.parallelism.max(1));
    let tasks = sources.iter().enumerate().map(|(index, (source, endpoint))| {
        let permits = &permits;
        async move {
            let _permit = permits.acquire().await.expect("semaphore never closed");
            let started = Instant::now();
            let outcome = match tokio::time::timeout(settings.per_source_timeout, executor.execute(*source, endpoint)).await {
                Ok(r) => r,
                Err(_) => Err(SourceFailure {
                    calls: vec![ApiCallRecord {
                        source: *source,
                        method: genomagent_core::Method::Get,
                        url: endpoint.template_key(),
                        status: None,
                        error: Some(format!("timed out after {} ms", settings.per_source_timeout.as_millis())),
                        bytes: 0,
                        result_count: None,
                        body: None,
                    }],
                    message: "timed out".into(),
                }),
            };
            SourceResult { index, source: *source, elapsed_ms: started.elapsed().as_millis() as u64, outcome }
        }
    });
    join_all(tasks).await
}

/// Content kind of a fetched response, for route checks.
pub fn content_kind(fetch: &SourceFetch) -> Option<ContentKind> {
    fetch.response.as_ref().map(|r| r.content_kind)
}

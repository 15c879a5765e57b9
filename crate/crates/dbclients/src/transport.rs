use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use genomagent_core::{ApiRequest, ApiResponse, Method, Pacer, SourceId};

use crate::fixtures::canonical_url;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("network error for {url}: {message}")]
    Network { url: String, message: String },
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("no fixture for {method} {url} (digest {digest})")]
    FixtureMiss { method: String, url: String, digest: String },
    #[error("network access denied for {url}")]
    Denied { url: String },
    #[error("fixture store: {0}")]
    Fixture(String),
}

/// Executes one HTTP request. Any status code is a successful transport
/// result; interpreting it is the caller's job.
#[async_trait]
pub trait HttpTransport: Send + Sync {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError>;
}

/// A request together with the response it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiExchange {
    pub request: ApiRequest,
    pub response: ApiResponse,
}

/// reqwest-backed transport with per-request timeout and NCBI pacing.
pub struct LiveTransport {
    client: reqwest::Client,
    ncbi_pacer: Pacer,
}

impl LiveTransport {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

    pub fn new(timeout: Duration, ncbi_requests_per_second: f64) -> Result<Self, TransportError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("genomagent/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Network { url: String::new(), message: e.to_string() })?;
        Ok(Self { client, ncbi_pacer: Pacer::per_second(ncbi_requests_per_second) })
    }
}

#[async_trait]
impl HttpTransport for LiveTransport {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        if matches!(request.source, SourceId::NcbiEutils | SourceId::Blast) {
            tokio::time::sleep(self.ncbi_pacer.reserve()).await;
        }
        let url = request.url().to_string();
        let mut builder = match request.method {
            Method::Get => self.client.get(request.url().clone()),
            Method::Post => self.client.post(request.url().clone()),
        };
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        if let Some(body) = &request.body {
            builder = builder.body(body.clone());
        }
        let started = Instant::now();
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout { url: url.clone() }
            } else {
                TransportError::Network { url: url.clone(), message: e.to_string() }
            }
        })?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let body = response
            .bytes()
            .await
            .map_err(|e| TransportError::Network { url: url.clone(), message: e.to_string() })?;
        let latency = started.elapsed().as_millis() as u64;
        Ok(ApiResponse::new(status, content_type.as_deref(), body.to_vec(), latency))
    }
}

/// Refuses every request and counts the attempts. Used to prove a run made
/// no network traffic.
#[derive(Debug, Default)]
pub struct DenyingTransport {
    attempts: AtomicUsize,
}

impl DenyingTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl HttpTransport for DenyingTransport {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::Denied { url: request.url().to_string() })
    }
}

#[derive(Debug, Clone)]
struct Canned {
    status: u16,
    content_type: Option<String>,
    body: Vec<u8>,
    delay: Duration,
}

/// In-memory transport keyed by method + canonical URL. A route may hold a
/// sequence of responses: each call pops the front until one remains, which
/// then repeats.
#[derive(Debug, Default)]
pub struct StubTransport {
    routes: Mutex<HashMap<String, Vec<Canned>>>,
    log: Mutex<Vec<String>>,
}

impl StubTransport {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(method: Method, url: &str) -> String {
        let parsed = url::Url::parse(url).expect("stub route URL must be absolute");
        format!("{} {}", method.as_str(), canonical_url(&parsed))
    }

    pub fn route(&self, method: Method, url: &str, status: u16, content_type: Option<&str>, body: impl Into<Vec<u8>>) {
        self.route_delayed(method, url, status, content_type, body, Duration::ZERO);
    }

    pub fn route_delayed(
        &self,
        method: Method,
        url: &str,
        status: u16,
        content_type: Option<&str>,
        body: impl Into<Vec<u8>>,
        delay: Duration,
    ) {
        let canned = Canned { status, content_type: content_type.map(str::to_string), body: body.into(), delay };
        self.routes.lock().expect("stub lock").entry(Self::key(method, url)).or_default().push(canned);
    }

    pub fn get_json(&self, url: &str, body: &str) {
        self.route(Method::Get, url, 200, Some("application/json"), body);
    }

    /// URLs requested so far, in order.
    pub fn requests(&self) -> Vec<String> {
        self.log.lock().expect("stub lock").clone()
    }
}

#[async_trait]
impl HttpTransport for StubTransport {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        let key = format!("{} {}", request.method.as_str(), canonical_url(request.url()));
        self.log.lock().expect("stub lock").push(request.url().to_string());
        let canned = {
            let mut routes = self.routes.lock().expect("stub lock");
            let queue = routes.get_mut(&key).ok_or_else(|| TransportError::Network {
                url: request.url().to_string(),
                message: "no stub route".into(),
            })?;
            if queue.len() > 1 {
                queue.remove(0)
            } else {
                queue[0].clone()
            }
        };
        if !canned.delay.is_zero() {
            tokio::time::sleep(canned.delay).await;
        }
        Ok(ApiResponse::new(
            canned.status,
            canned.content_type.as_deref(),
            canned.body,
            canned.delay.as_millis() as u64,
        ))
    }
}

#[async_trait]
impl<T: HttpTransport + ?Sized> HttpTransport for Arc<T> {
    async fn execute(&self, request: &ApiRequest) -> Result<ApiResponse, TransportError> {
        (**self).execute(request).await
    }
}
